#pragma once

#include "mfiv/quotes.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfiv::testing {

inline std::string fixture_path(const std::string& name) { return std::string(MFIV_FIXTURES) + "/" + name; }

inline std::vector<MarketSnapshot> load_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name));
    if (!in) throw std::runtime_error("cannot open fixture " + name);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_snapshot(text.str());
}

}  // namespace mfiv::testing
