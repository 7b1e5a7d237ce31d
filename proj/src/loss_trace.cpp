#include "noisylab/loss_trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace noisylab {

TraceFormatError::TraceFormatError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("loss trace line {}: {}", line, what)), line_(line) {}

void write_loss_trace_header(std::ostream& out) { out << kLossTraceHeader << '\n'; }

void write_loss_trace_rows(std::ostream& out, const std::vector<LossTraceRow>& rows) {
  for (const auto& r : rows) {
    fmt::print(out, "{},{},{},{},{},{}\n", r.epoch, r.sample_id, r.raw_loss, r.normalized_loss,
               r.posterior_noisy, r.is_actually_noisy ? 1 : 0);
  }
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  T value{};
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw TraceFormatError(line, fmt::format("bad {} value '{}'", name, field));
  }
  return value;
}

}  // namespace

std::vector<LossTraceRow> read_loss_trace(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line)) throw TraceFormatError(1, "empty file");
  ++number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLossTraceHeader) throw TraceFormatError(number, "unexpected header '" + line + "'");

  std::vector<LossTraceRow> rows;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 6) {
      throw TraceFormatError(number, fmt::format("expected 6 fields, found {}", f.size()));
    }
    LossTraceRow r;
    r.epoch = parse_field<int>(f[0], number, "epoch");
    r.sample_id = parse_field<std::size_t>(f[1], number, "sample_id");
    r.raw_loss = parse_field<double>(f[2], number, "raw_loss");
    r.normalized_loss = parse_field<double>(f[3], number, "normalized_loss");
    r.posterior_noisy = parse_field<double>(f[4], number, "posterior_noisy");
    const int flag = parse_field<int>(f[5], number, "is_actually_noisy");
    if (flag != 0 && flag != 1) throw TraceFormatError(number, "is_actually_noisy must be 0 or 1");
    r.is_actually_noisy = flag == 1;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace noisylab
