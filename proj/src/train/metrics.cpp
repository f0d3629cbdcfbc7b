#include "cuneinet/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "cuneinet/errors.hpp"

namespace cuneinet {

std::size_t EvalReport::samples() const {
  std::size_t n = 0;
  for (const auto& row : confusion)
    for (std::size_t v : row) n += v;
  return n;
}

EvalReport report_from_confusion(std::vector<std::vector<std::size_t>> confusion,
                                 std::vector<std::string> class_names) {
  const std::size_t c = confusion.size();
  for (const auto& row : confusion)
    if (row.size() != c) throw DimensionError("confusion matrix must be square");
  if (class_names.empty())
    for (std::size_t i = 0; i < c; ++i) class_names.push_back("class" + std::to_string(i));
  if (class_names.size() != c) throw DimensionError("class name count does not match confusion matrix");

  EvalReport r;
  r.class_names = std::move(class_names);
  r.confusion = std::move(confusion);
  r.per_class_f1.resize(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t tp = r.confusion[k][k], predicted = 0, actual = 0;
    for (std::size_t i = 0; i < c; ++i) {
      predicted += r.confusion[i][k];
      actual += r.confusion[k][i];
    }
    const double precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
    const double recall = actual ? static_cast<double>(tp) / actual : 0.0;
    r.per_class_f1[k] =
        precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  double sum = 0.0;
  for (double f : r.per_class_f1) sum += f;
  r.macro_f1 = c ? sum / static_cast<double>(c) : 0.0;
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  char buf[64];
  os << "samples: " << r.samples() << "\n";
  std::snprintf(buf, sizeof buf, "%.10f", r.macro_f1);
  os << "macro_f1: " << buf << "\n";
  for (std::size_t k = 0; k < r.class_names.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.10f", r.per_class_f1[k]);
    os << "f1[" << r.class_names[k] << "]: " << buf << "\n";
  }
  os << "confusion (rows true, columns predicted):\n";
  for (std::size_t i = 0; i < r.confusion.size(); ++i) {
    os << r.class_names[i];
    for (std::size_t v : r.confusion[i]) os << '\t' << v;
    os << "\n";
  }
  return os.str();
}

EvalReport parse_report(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  bool in_grid = false;
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> grid;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t at = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    if (line.rfind("confusion", 0) == 0) {
      in_grid = true;
      continue;
    }
    if (!in_grid) continue;  // header values are recomputed from the grid
    std::istringstream row(line);
    std::string name;
    if (!std::getline(row, name, '\t')) throw ParseError("bad confusion row", at);
    names.push_back(name);
    std::vector<std::size_t> counts;
    for (std::string cell; std::getline(row, cell, '\t');) {
      try {
        counts.push_back(std::stoul(cell));
      } catch (const std::exception&) {
        throw ParseError("bad confusion count '" + cell + "'", at);
      }
    }
    grid.push_back(std::move(counts));
  }
  if (grid.empty()) throw ParseError("report has no confusion grid", offset);
  return report_from_confusion(std::move(grid), std::move(names));
}

}  // namespace cuneinet
