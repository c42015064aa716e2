#include "falkon/trace.hpp"

#include <charconv>
#include <string>

namespace falkon {

namespace {

std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void IterTrace::write_csv(std::ostream& out, bool with_time) const {
  out << "iteration,objective,test_metric,seconds\n";
  for (const auto& r : records) {
    out << r.iteration << ',' << shortest(r.objective) << ',';
    if (r.test_metric) out << shortest(*r.test_metric);
    out << ',' << (with_time ? shortest(r.seconds) : std::string("0")) << '\n';
  }
}

}  // namespace falkon
