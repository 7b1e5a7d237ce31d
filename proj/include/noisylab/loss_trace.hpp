#pragma once

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace noisylab {

/// One line of the per-epoch loss dump.
struct LossTraceRow {
  int epoch = 0;
  std::size_t sample_id = 0;
  double raw_loss = 0.0;
  double normalized_loss = 0.0;
  double posterior_noisy = 0.0;
  bool is_actually_noisy = false;

  friend bool operator==(const LossTraceRow&, const LossTraceRow&) = default;
};

class TraceFormatError : public std::runtime_error {
 public:
  TraceFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr const char* kLossTraceHeader =
    "epoch,sample_id,raw_loss,normalized_loss,posterior_noisy,is_actually_noisy";

void write_loss_trace_header(std::ostream& out);
void write_loss_trace_rows(std::ostream& out, const std::vector<LossTraceRow>& rows);
/// Parses a dump written by the functions above. Throws TraceFormatError
/// naming the offending line.
std::vector<LossTraceRow> read_loss_trace(std::istream& in);

}  // namespace noisylab
