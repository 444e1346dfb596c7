#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "gridsec/jacobian.hpp"
#include "gridsec/measured_graph.hpp"
#include "gridsec/network.hpp"

#ifndef GRIDSEC_FIXTURE_DIR
#error "GRIDSEC_FIXTURE_DIR must be defined by the build"
#endif

namespace gridsec::test {

inline std::string fixture_path(const std::string& name) {
    return std::string(GRIDSEC_FIXTURE_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fixture_text(const std::string& name) { return slurp(fixture_path(name)); }

struct Case {
    PowerNetwork net;
    MeasurementPlacement meas;
    Jacobian jac;
    MeasuredGraph mg;

    Case(PowerNetwork n, MeasurementPlacement m)
        : net(std::move(n)), meas(std::move(m)), jac(build_jacobian(net, meas)), mg(net, meas) {}
};

inline Case load_case(const std::string& case_file, const std::string& meas_file) {
    PowerNetwork net = PowerNetwork::parse_case(fixture_text(case_file));
    MeasurementPlacement meas = MeasurementPlacement::parse(fixture_text(meas_file), net);
    return Case(std::move(net), std::move(meas));
}

inline std::vector<int> meter_rows(const MeasurementPlacement& meas,
                                   const std::vector<std::string>& ids) {
    std::vector<int> rows;
    for (const auto& id : ids) rows.push_back(meas.meter_index(id).value());
    return rows;
}

}  // namespace gridsec::test
