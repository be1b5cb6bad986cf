#include "cafda/prepare.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "cafda/csv.hpp"
#include "cafda/errors.hpp"

namespace cafda {
namespace {

[[noreturn]] void schema_error(std::string_view source, std::size_t line, const std::string& what) {
  throw DataError(std::string(source) + ":" + std::to_string(line) + ": " + what);
}

double cell_value(std::string_view cell, std::string_view source, std::size_t line, std::size_t column) {
  const auto v = csv::parse_double(csv::trim(cell));
  if (!v) schema_error(source, line, "column " + std::to_string(column + 1) + " is not numeric ('" +
                                         std::string(cell) + "')");
  return *v;
}

int class_value(std::string_view cell, std::string_view source, std::size_t line) {
  const auto v = csv::parse_double(csv::trim(cell));
  if (!v || *v != std::floor(*v)) schema_error(source, line, "class '" + std::string(cell) + "' is not an integer");
  return static_cast<int>(*v);
}

std::vector<std::string> numbered_names(std::string_view prefix, std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back(std::string(prefix) + std::to_string(i + 1));
  return names;
}

// Shared loop for headerless class-last tables. `map_class` returns -1 to drop the row.
template <typename Split, typename MapClass>
Dataset read_class_last(std::istream& raw, std::string_view source, std::size_t n_fields, Split split,
                        MapClass map_class, std::string name, std::vector<std::string> feature_names) {
  Dataset data;
  data.name = std::move(name);
  data.feature_names = std::move(feature_names);
  data.features = FeatureMatrix(0, n_fields - 1);
  std::vector<Label> labels;
  std::vector<double> row(n_fields - 1);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(raw, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != n_fields) {
      schema_error(source, line_no,
                   "expected " + std::to_string(n_fields) + " fields, found " + std::to_string(cells.size()));
    }
    const int label = map_class(class_value(cells.back(), source, line_no), line_no);
    if (label < 0) continue;
    for (std::size_t c = 0; c + 1 < n_fields; ++c) row[c] = cell_value(cells[c], source, line_no, c);
    data.features.append_row(row);
    labels.push_back(static_cast<Label>(label));
  }
  if (labels.empty()) throw DataError(std::string(source) + ": no usable rows");
  data.labels = HiddenLabels(std::move(labels));
  return data;
}

Dataset prepare_shuttle(std::istream& raw, std::string_view source) {
  auto map = [source](int c, std::size_t line) {
    if (c < 1 || c > 7) schema_error(source, line, "shuttle class " + std::to_string(c) + " outside 1..7");
    if (c == 4) return -1;
    return c == 1 ? 0 : 1;
  };
  return read_class_last(raw, source, 10, [](std::string_view l) { return csv::split_whitespace(l); }, map, "shuttle",
                         numbered_names("a", 9));
}

Dataset prepare_covtype(std::istream& raw, std::string_view source) {
  auto map = [source](int c, std::size_t line) {
    if (c < 1 || c > 7) schema_error(source, line, "covtype class " + std::to_string(c) + " outside 1..7");
    if (c == 2) return 0;
    if (c == 4 || c == 5) return 1;
    return -1;
  };
  std::vector<std::string> names{"elevation", "aspect", "slope", "h_dist_hydrology", "v_dist_hydrology",
                                 "h_dist_roadways", "hillshade_9am", "hillshade_noon", "hillshade_3pm",
                                 "h_dist_fire_points"};
  for (auto& n : numbered_names("wilderness_", 4)) names.push_back(n);
  for (auto& n : numbered_names("soil_", 40)) names.push_back(n);
  return read_class_last(raw, source, 55, [](std::string_view l) { return csv::split_line(l); }, map, "covtype",
                         std::move(names));
}

Dataset prepare_creditcard(std::istream& raw, std::string_view source) {
  std::string line;
  if (!std::getline(raw, line)) schema_error(source, 1, "missing header");
  auto header = csv::split_line(line);
  for (auto& h : header) h = std::string(csv::trim(h));
  std::size_t class_col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "Class") class_col = i;
  }
  if (class_col == header.size()) schema_error(source, 1, "no 'Class' column in header");

  Dataset data;
  data.name = "creditcard";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i != class_col) data.feature_names.push_back(header[i]);
  }
  data.features = FeatureMatrix(0, header.size() - 1);
  std::vector<Label> labels;
  std::vector<double> row(header.size() - 1);
  std::size_t line_no = 1;
  while (std::getline(raw, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split_line(line);
    if (cells.size() != header.size()) {
      schema_error(source, line_no,
                   "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(cells.size()));
    }
    const int c = class_value(cells[class_col], source, line_no);
    if (c != 0 && c != 1) schema_error(source, line_no, "Class must be 0 or 1, got " + std::to_string(c));
    std::size_t k = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i != class_col) row[k++] = cell_value(cells[i], source, line_no, i);
    }
    data.features.append_row(row);
    labels.push_back(static_cast<Label>(c));
  }
  if (labels.empty()) throw DataError(std::string(source) + ": no usable rows");
  data.labels = HiddenLabels(std::move(labels));
  return data;
}

}  // namespace

std::string_view to_string(PublicDataset d) {
  switch (d) {
    case PublicDataset::shuttle: return "shuttle";
    case PublicDataset::covtype: return "covtype";
    case PublicDataset::creditcard: return "creditcard";
  }
  return "?";
}

std::optional<PublicDataset> parse_public_dataset(std::string_view name) {
  for (auto d : {PublicDataset::shuttle, PublicDataset::covtype, PublicDataset::creditcard}) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

PrepMapping prep_mapping(PublicDataset d) {
  switch (d) {
    case PublicDataset::shuttle:
      return {"UCI Statlog shuttle: whitespace separated, 9 numeric attributes then class 1..7, no header",
              "class 1 -> 0, class 4 dropped, classes 2,3,5,6,7 -> 1"};
    case PublicDataset::covtype:
      return {"UCI covtype.data: comma separated, 54 numeric attributes then cover type 1..7, no header",
              "type 2 (Lodgepole Pine) -> 0, types 4 (Cottonwood/Willow) and 5 (Aspen) -> 1, others dropped"};
    case PublicDataset::creditcard:
      return {"Kaggle creditcard.csv: header row, Time, V1..V28, Amount, Class", "Class copied as the label"};
  }
  return {};
}

Dataset prepare_dataset(PublicDataset d, std::istream& raw, std::string_view source) {
  switch (d) {
    case PublicDataset::shuttle: return prepare_shuttle(raw, source);
    case PublicDataset::covtype: return prepare_covtype(raw, source);
    case PublicDataset::creditcard: return prepare_creditcard(raw, source);
  }
  throw ConfigError("unknown dataset");
}

Dataset prepare_dataset(PublicDataset d, const std::filesystem::path& raw_path) {
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw DataError("cannot open raw file: " + raw_path.string());
  return prepare_dataset(d, in, raw_path.string());
}

DatasetDescriptor prepare_dataset_file(PublicDataset d, const std::filesystem::path& raw_path,
                                       const std::filesystem::path& out_path) {
  const auto data = prepare_dataset(d, raw_path);
  write_dataset(data, out_path, "label");
  return data.descriptor();
}

}  // namespace cafda
