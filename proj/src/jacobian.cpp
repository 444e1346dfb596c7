#include "gridsec/jacobian.hpp"

namespace gridsec {

namespace {

// One signed 1/x contribution per (column, branch) pair.
struct Term {
    int col;  // state column, -1 when the endpoint is the reference bus
    int sign;
    int branch;
};

// Flow measured from bus a toward bus b over the given branch.
void flow_terms(const PowerNetwork& net, int branch, BusId a, BusId b, std::vector<Term>& out) {
    out.push_back({net.state_column(a), +1, branch});
    out.push_back({net.state_column(b), -1, branch});
}

std::vector<Term> meter_terms(const PowerNetwork& net, const Meter& m) {
    std::vector<Term> terms;
    if (m.kind == MeterKind::Flow) {
        const Branch& br = net.branches()[m.branch];
        if (m.dir == FlowDir::Forward)
            flow_terms(net, m.branch, br.from, br.to, terms);
        else
            flow_terms(net, m.branch, br.to, br.from, terms);
    } else {
        // Injections see real branches only; pseudo PMU lines carry no power.
        for (int bi : net.incident(m.bus)) {
            const Branch& br = net.branches()[bi];
            if (br.pseudo) continue;
            const BusId other = br.from == m.bus ? br.to : br.from;
            flow_terms(net, bi, m.bus, other, terms);
        }
    }
    return terms;
}

}  // namespace

Jacobian build_jacobian(const PowerNetwork& net, const MeasurementPlacement& meas) {
    Jacobian j;
    j.h = Matrix(meas.meter_count(), net.state_count());
    j.col_buses = net.state_buses();
    for (int r = 0; r < meas.meter_count(); ++r) {
        const Meter& m = meas.meter(r);
        j.row_ids.push_back(m.id);
        for (const Term& t : meter_terms(net, m)) {
            if (t.col < 0) continue;
            j.h(r, t.col) += t.sign / net.branches()[t.branch].x;
        }
    }
    return j;
}

RatMatrix build_jacobian_exact(const PowerNetwork& net, const MeasurementPlacement& meas) {
    RatMatrix h(meas.meter_count(), net.state_count());
    for (int r = 0; r < meas.meter_count(); ++r) {
        for (const Term& t : meter_terms(net, meas.meter(r))) {
            if (t.col < 0) continue;
            const Rat inv_x = Rat(1) / Rat::from_decimal(net.branches()[t.branch].x);
            h(r, t.col) = h(r, t.col) + (t.sign > 0 ? inv_x : Rat(0) - inv_x);
        }
    }
    return h;
}

}  // namespace gridsec
