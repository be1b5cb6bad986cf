#include "cafda/datapool.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cafda/csv.hpp"
#include "cafda/rng.hpp"

namespace cafda {

HiddenLabels::HiddenLabels(std::vector<Label> labels) : labels_(std::move(labels)) {
  for (Label y : labels_) {
    if (y > 1) throw DataError("label outside {0,1}");
    positives_ += y;
  }
}

Label HiddenLabels::at(RowId row) const {
  if (row >= labels_.size()) throw StateError("unknown row_id " + std::to_string(row));
  return labels_[row];
}

DatasetDescriptor Dataset::descriptor() const {
  DatasetDescriptor d;
  d.name = name;
  d.n_samples = labels.size();
  d.n_features = features.cols();
  d.dimension = features.cols() + 1;
  d.n_positives = labels.count_positive();
  d.anomaly_proportion =
      d.n_samples == 0 ? 0.0 : static_cast<double>(d.n_positives) / static_cast<double>(d.n_samples);
  return d;
}

std::optional<std::size_t> Dataset::feature_index(std::string_view column) const {
  const auto it = std::find(feature_names.begin(), feature_names.end(), column);
  if (it == feature_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names.begin());
}

Dataset load_dataset(const std::filesystem::path& path, std::string_view label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file (no header): " + path.string());
  auto header = csv::split_line(line);
  for (auto& h : header) h = std::string(csv::trim(h));

  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw DataError("label column '" + std::string(label_column) + "' not found in " + path.string());
  }
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());

  Dataset data;
  data.name = path.stem().string();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_pos) data.feature_names.push_back(header[c]);
  }

  const std::size_t d = header.size() - 1;
  std::vector<double> values;
  std::vector<Label> labels;
  std::vector<double> row(d);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (csv::trim(line).empty()) continue;
    const auto cells = csv::split_line(line);
    if (cells.size() != header.size()) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << header.size() << " columns, got "
          << cells.size();
      throw DataError(msg.str());
    }
    std::size_t k = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = csv::parse_double(cells[c]);
      if (c == label_pos) {
        if (!v || (*v != 0.0 && *v != 1.0)) {
          std::ostringstream msg;
          msg << path.string() << ":" << line_no << ": label '" << cells[c] << "' not in {0,1}";
          throw DataError(msg.str());
        }
        labels.push_back(static_cast<Label>(*v));
      } else {
        if (!v) {
          std::ostringstream msg;
          msg << path.string() << ":" << line_no << ": non-numeric value '" << cells[c]
              << "' in column '" << header[c] << "'";
          throw DataError(msg.str());
        }
        row[k++] = *v;
      }
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  if (labels.empty()) throw DataError("dataset has no rows: " + path.string());

  data.features = FeatureMatrix(labels.size(), d, std::move(values));
  data.labels = HiddenLabels(std::move(labels));
  return data;
}

void write_dataset(const Dataset& data, const std::filesystem::path& path,
                   std::string_view label_column) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path.string());
  for (const auto& name : data.feature_names) out << name << ',';
  out << label_column << '\n';
  for (std::size_t r = 0; r < data.features.rows(); ++r) {
    for (double v : data.features.row(r)) out << csv::format_double(v) << ',';
    out << static_cast<int>(data.labels.at(static_cast<RowId>(r))) << '\n';
  }
  if (!out) throw DataError("write failed: " + path.string());
}

PoolState PoolState::from_partition(std::size_t total_rows, std::vector<RowId> unlabeled,
                                    std::vector<std::pair<RowId, Label>> labeled) {
  PoolState pool;
  pool.status_.assign(total_rows, Status::inactive);
  std::sort(unlabeled.begin(), unlabeled.end());
  for (RowId r : unlabeled) {
    if (r >= total_rows) throw StateError("row_id out of range: " + std::to_string(r));
    if (pool.status_[r] != Status::inactive) throw StateError("duplicate row_id in partition");
    pool.status_[r] = Status::unlabeled;
  }
  for (auto [r, y] : labeled) {
    if (r >= total_rows) throw StateError("row_id out of range: " + std::to_string(r));
    if (pool.status_[r] != Status::inactive) throw StateError("row_id both labeled and unlabeled");
    if (y > 1) throw DataError("label outside {0,1}");
    pool.status_[r] = y ? Status::positive : Status::negative;
    pool.labeled_.push_back(r);
    pool.labeled_labels_.push_back(y);
    pool.labeled_positives_ += y;
  }
  pool.unlabeled_ = std::move(unlabeled);
  return pool;
}

PoolState::Status PoolState::status(RowId row) const {
  if (row >= status_.size()) throw StateError("unknown row_id " + std::to_string(row));
  return status_[row];
}

PoolState PoolState::reveal(RowId row, Label label) const {
  const Status s = status(row);
  if (s == Status::inactive) throw StateError("row_id " + std::to_string(row) + " is not in the pool");
  if (s != Status::unlabeled) throw StateError("row_id " + std::to_string(row) + " is already labeled");
  if (label > 1) throw DataError("label outside {0,1}");

  PoolState next = *this;
  next.status_[row] = label ? Status::positive : Status::negative;
  next.labeled_.push_back(row);
  next.labeled_labels_.push_back(label);
  next.labeled_positives_ += label;
  const auto it = std::lower_bound(next.unlabeled_.begin(), next.unlabeled_.end(), row);
  next.unlabeled_.erase(it);
  ++next.step_;
  return next;
}

PoolState initial_split(const HiddenLabels& labels, const SplitConfig& config) {
  if (labels.size() == 0) throw DataError("initial split: empty dataset");
  if (!(config.init_fraction > 0.0 && config.init_fraction < 1.0)) {
    throw ConfigError("split.init_fraction must lie in (0,1)");
  }

  Rng rng(derive_seed(config.seed, "initial_split"));
  std::vector<RowId> active(labels.size());
  std::iota(active.begin(), active.end(), RowId{0});
  if (config.subsample_size && *config.subsample_size < active.size()) {
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    const std::size_t k = *config.subsample_size;
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.index(active.size() - i));
      std::swap(active[i], active[j]);
    }
    active.resize(k);
    std::sort(active.begin(), active.end());
  }

  const auto n_active = active.size();
  const auto n_labeled =
      static_cast<std::size_t>(std::floor(config.init_fraction * static_cast<double>(n_active)));
  if (n_labeled == 0) throw DataError("initial split: init_fraction yields 0 labeled rows");

  std::vector<RowId> order = active;
  for (std::size_t attempt = 0; attempt < config.max_retries; ++attempt) {
    for (std::size_t i = 0; i < n_labeled; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.index(n_active - i));
      std::swap(order[i], order[j]);
    }
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_labeled; ++i) pos += labels.at(order[i]);
    if (pos < config.min_positives || n_labeled - pos < config.min_negatives) continue;

    std::vector<RowId> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_labeled));
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::pair<RowId, Label>> labeled;
    labeled.reserve(chosen.size());
    for (RowId r : chosen) labeled.emplace_back(r, labels.at(r));
    std::vector<RowId> unlabeled;
    unlabeled.reserve(n_active - n_labeled);
    std::set_difference(active.begin(), active.end(), chosen.begin(), chosen.end(),
                        std::back_inserter(unlabeled));
    return PoolState::from_partition(labels.size(), std::move(unlabeled), std::move(labeled));
  }
  throw DataError("initial split: retry budget exhausted (cannot draw " +
                  std::to_string(config.min_positives) + " positive(s) and " +
                  std::to_string(config.min_negatives) + " negative(s) in " +
                  std::to_string(n_labeled) + " rows)");
}

std::pair<PoolState, Label> apply_query(const PoolState& pool, RowId row, const HiddenLabels& labels) {
  const Label y = labels.at(row);
  return {pool.reveal(row, y), y};
}

double unlabeled_prevalence(const PoolState& pool, const HiddenLabels& labels) {
  const auto ids = pool.unlabeled();
  if (ids.empty()) throw StateError("unlabeled pool is empty");
  std::size_t pos = 0;
  for (RowId r : ids) pos += labels.at(r);
  return static_cast<double>(pos) / static_cast<double>(ids.size());
}

}  // namespace cafda
