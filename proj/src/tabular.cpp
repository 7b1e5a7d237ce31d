#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "dataset_internal.hpp"
#include "noisylab/dataset.hpp"

namespace noisylab {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

NoisyDataset ingest_tabular(std::istream& in, const std::string& label_column,
                            double validation_fraction, std::uint64_t seed) {
  std::string line;
  if (!std::getline(in, line)) throw TabularError("csv: empty file");
  const auto header = split_csv(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw TabularError(fmt::format("csv: no column named '{}' in header", label_column));
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t dim = header.size() - 1;
  if (dim == 0) throw TabularError("csv: no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  std::map<std::string, int> class_of;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw TabularError(fmt::format("csv row {}: expected {} columns, found {}", row,
                                     header.size(), cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        auto [it, inserted] = class_of.try_emplace(cells[c], static_cast<int>(class_of.size()));
        labels.push_back(it->second);
        continue;
      }
      double v = 0.0;
      const auto& cell = cells[c];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw TabularError(fmt::format("csv row {}, column '{}': non-numeric value '{}'", row,
                                       header[c], cell));
      }
      values.push_back(v);
    }
  }
  if (labels.empty()) throw TabularError("csv: no data rows");
  if (class_of.size() < 2) throw TabularError("csv: label column has a single class");

  const std::size_t n = labels.size();
  Tensor features({n, dim}, std::move(values));
  std::mt19937_64 rng(seed);
  auto splits = detail::stratified_split(labels, class_of.size(), validation_fraction, rng);
  std::vector<std::size_t> train_rows;
  for (std::size_t i = 0; i < n; ++i)
    if (splits[i] == Split::train) train_rows.push_back(i);
  Standardization st = detail::standardize(features, train_rows);

  NoisyDataset ds(std::move(features), std::move(labels), std::move(splits), class_of.size(), seed);
  ds.set_standardization(std::move(st));
  return ds;
}

NoisyDataset ingest_tabular(const std::string& path, const std::string& label_column,
                            double validation_fraction, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw TabularError("csv: cannot open " + path);
  return ingest_tabular(in, label_column, validation_fraction, seed);
}

}  // namespace noisylab
