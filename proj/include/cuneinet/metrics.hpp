#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cuneinet {

struct EvalReport {
  std::vector<std::string> class_names;
  std::vector<std::vector<std::size_t>> confusion;  // rows true, columns predicted
  std::vector<double> per_class_f1;
  double macro_f1 = 0.0;

  std::size_t samples() const;
};

/// Per-class F1 = 2PR/(P+R), 0 when P+R = 0; macro F1 is their plain mean.
EvalReport report_from_confusion(std::vector<std::vector<std::size_t>> confusion,
                                 std::vector<std::string> class_names = {});

std::string format_report(const EvalReport& report);
EvalReport parse_report(std::string_view text);

}  // namespace cuneinet
