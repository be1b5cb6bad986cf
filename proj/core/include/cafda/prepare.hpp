#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cafda/datapool.hpp"

namespace cafda {

enum class PublicDataset { shuttle, covtype, creditcard };

std::string_view to_string(PublicDataset d);
std::optional<PublicDataset> parse_public_dataset(std::string_view name);

/// How a raw public file maps onto the canonical layout.
struct PrepMapping {
  std::string raw_format;
  std::string class_rule;
};
PrepMapping prep_mapping(PublicDataset d);

/// Converts a raw public file. The output label column is always "label".
/// Schema problems raise DataError naming `source` and the line number.
Dataset prepare_dataset(PublicDataset d, std::istream& raw, std::string_view source);
Dataset prepare_dataset(PublicDataset d, const std::filesystem::path& raw_path);

/// Converts and writes the canonical CSV; returns the descriptor of the result.
DatasetDescriptor prepare_dataset_file(PublicDataset d, const std::filesystem::path& raw_path,
                                       const std::filesystem::path& out_path);

}  // namespace cafda
