#include <doctest.h>

#include <regex>

#include "hoif/svg.hpp"

namespace {

std::size_t count(const std::string& s, const std::string& what) {
  std::size_t n = 0;
  for (auto pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + 1)) ++n;
  return n;
}

/// Checks tag nesting of the restricted XML the plotter emits.
bool well_formed(const std::string& s) {
  std::vector<std::string> stack;
  const std::regex tag(R"(<(/?)([a-zA-Z][\w-]*)[^>]*?(/?)>)");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), tag); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    if (m[3] == "/") continue;
    if (m[1] == "/") {
      if (stack.empty() || stack.back() != m[2]) return false;
      stack.pop_back();
    } else {
      stack.push_back(m[2]);
    }
  }
  return stack.empty();
}

}  // namespace

TEST_CASE("line plot structure") {
  hoif::PlotSpec spec;
  spec.title = "Loss & error";
  spec.x_label = "epoch";
  spec.y_label = "value";
  spec.series = {{"a", {1, 2, 3}, {3, 2, 1}}, {"b<c>", {1, 2, 3}, {1, 1.5, 1.2}}};
  const std::string svg = hoif::line_plot_svg(spec);
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(well_formed(svg));
  CHECK(count(svg, "<polyline class=\"series\"") == 2);
  CHECK(count(svg, "id=\"x-axis\"") == 1);
  CHECK(count(svg, "id=\"y-axis\"") == 1);
  CHECK(svg.find("Loss &amp; error") != std::string::npos);
  CHECK(svg.find("b&lt;c&gt;") != std::string::npos);
}

TEST_CASE("categorical axis and degenerate data") {
  hoif::PlotSpec spec;
  spec.series = {{"only", {0, 1}, {5, 5}}};
  spec.x_categories = {"gcn_baseline", "hoifnet"};
  const std::string svg = hoif::line_plot_svg(spec);
  CHECK(well_formed(svg));
  CHECK(svg.find(">hoifnet<") != std::string::npos);
  CHECK(svg.find("nan") == std::string::npos);

  hoif::PlotSpec empty;
  CHECK(well_formed(hoif::line_plot_svg(empty)));
}
