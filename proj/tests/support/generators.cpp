#include "generators.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace gridsec::test {

namespace {

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace

PowerNetwork random_connected_network(std::mt19937_64& rng, int buses, int edges,
                                      bool unit_reactance) {
    std::vector<BusId> ids(buses);
    for (int i = 0; i < buses; ++i) ids[i] = i + 1;
    std::vector<std::pair<BusId, BusId>> chosen;
    std::set<std::pair<BusId, BusId>> used;
    // Random spanning tree: attach each new bus to a random earlier one.
    std::vector<BusId> order = ids;
    shuffle(order, rng);
    for (int i = 1; i < buses; ++i) {
        const BusId a = order[rng() % i];
        const BusId b = order[i];
        chosen.push_back({std::min(a, b), std::max(a, b)});
        used.insert(chosen.back());
    }
    int guard = 0;
    while (static_cast<int>(chosen.size()) < edges && ++guard < 100 * edges) {
        const BusId a = ids[rng() % buses];
        const BusId b = ids[rng() % buses];
        if (a == b) continue;
        const auto key = std::make_pair(std::min(a, b), std::max(a, b));
        if (used.count(key)) continue;
        used.insert(key);
        chosen.push_back(key);
    }
    std::uniform_real_distribution<double> xdist(0.4, 2.5);
    std::vector<Branch> branches;
    for (size_t i = 0; i < chosen.size(); ++i) {
        const double x = unit_reactance ? 1.0 : xdist(rng);
        branches.push_back({"e" + std::to_string(i + 1), chosen[i].first, chosen[i].second, x, false});
    }
    return PowerNetwork(ids, /*reference=*/1, std::move(branches));
}

MeasurementPlacement random_observable_placement(std::mt19937_64& rng, const PowerNetwork& net,
                                                 int flow_target, int injection_target) {
    const int nb = static_cast<int>(net.branches().size());
    // Spanning tree over branch indices.
    std::vector<int> order(nb);
    for (int i = 0; i < nb; ++i) order[i] = i;
    shuffle(order, rng);
    std::map<BusId, BusId> parent;
    std::vector<int> tree;
    {
        std::map<BusId, BusId> uf;
        std::function<BusId(BusId)> find = [&](BusId a) {
            if (!uf.count(a)) uf[a] = a;
            while (uf[a] != a) a = uf[a] = uf[uf[a]];
            return a;
        };
        for (int e : order) {
            const Branch& br = net.branches()[e];
            const BusId ra = find(br.from), rb = find(br.to);
            if (ra == rb) continue;
            uf[ra] = rb;
            tree.push_back(e);
        }
    }
    std::set<int> flow_branches;
    std::set<BusId> injected;
    // Cover each tree edge: prefer a flow meter, fall back to an endpoint
    // injection (classical mapping rules make the result observable).
    for (int e : tree) {
        const Branch& br = net.branches()[e];
        const bool prefer_injection = (rng() % 100) < 20;
        bool covered = false;
        if (prefer_injection) {
            for (BusId b : {br.from, br.to})
                if (!covered && !injected.count(b)) {
                    injected.insert(b);
                    covered = true;
                }
        }
        if (!covered) {
            flow_branches.insert(e);
            covered = true;
        }
    }
    // Top up to requested counts with random extras.
    std::vector<int> extra_branches(nb);
    for (int i = 0; i < nb; ++i) extra_branches[i] = i;
    shuffle(extra_branches, rng);
    for (int e : extra_branches) {
        if (static_cast<int>(flow_branches.size()) >= flow_target) break;
        flow_branches.insert(e);
    }
    std::vector<BusId> extra_buses = net.buses();
    shuffle(extra_buses, rng);
    for (BusId b : extra_buses) {
        if (static_cast<int>(injected.size()) >= injection_target) break;
        injected.insert(b);
    }

    std::vector<Meter> meters;
    int rid = 1;
    for (int e = 0; e < nb; ++e)
        if (flow_branches.count(e)) {
            Meter m;
            m.kind = MeterKind::Flow;
            m.id = "r" + std::to_string(rid++);
            m.branch = e;
            meters.push_back(m);
        }
    for (BusId b : net.buses())
        if (injected.count(b)) {
            Meter m;
            m.kind = MeterKind::Injection;
            m.id = "r" + std::to_string(rid++);
            m.bus = b;
            meters.push_back(m);
        }
    return MeasurementPlacement(net, std::move(meters), {});
}

StateSet random_targets(std::mt19937_64& rng, const PowerNetwork& net, int k) {
    StateSet pool = net.state_buses();
    shuffle(pool, rng);
    pool.resize(std::min<size_t>(k, pool.size()));
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace gridsec::test
