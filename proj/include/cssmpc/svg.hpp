#pragma once

#include <string>
#include <vector>

namespace cssmpc::svg {

struct Series {
    std::string label;
    std::string color;
    std::vector<double> values;
};

/// Minimal line chart (values against their index) as a standalone SVG.
std::string line_chart(const std::string& title, const std::vector<Series>& series);

}  // namespace cssmpc::svg
