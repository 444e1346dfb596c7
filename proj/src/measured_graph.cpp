#include "gridsec/measured_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

namespace gridsec {

namespace {

void sort_unique(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

struct UnionFind {
    std::map<BusId, BusId> parent;
    BusId find(BusId a) {
        auto it = parent.find(a);
        if (it == parent.end()) {
            parent[a] = a;
            return a;
        }
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    bool unite(BusId a, BusId b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

}  // namespace

MeasuredGraph::MeasuredGraph(const PowerNetwork& net, const MeasurementPlacement& meas)
    : net_(&net), meas_(&meas) {
    const int m = meas.meter_count();
    vertices_.resize(m);
    edges_.resize(m);
    edge_meters_.assign(net.branches().size(), {});
    for (int i = 0; i < m; ++i) {
        const Meter& meter = meas.meter(i);
        if (meter.kind == MeterKind::Flow) {
            const Branch& br = net.branches()[meter.branch];
            vertices_[i] = {br.from, br.to};
            edges_[i] = {meter.branch};
        } else {
            vertices_[i].push_back(meter.bus);
            for (int bi : net.incident(meter.bus)) {
                const Branch& br = net.branches()[bi];
                if (br.pseudo) continue;
                edges_[i].push_back(bi);
                vertices_[i].push_back(br.from == meter.bus ? br.to : br.from);
            }
        }
        sort_unique(vertices_[i]);
        sort_unique(edges_[i]);
        for (int e : edges_[i]) edge_meters_[e].push_back(i);
    }
    std::vector<int> all(m);
    for (int i = 0; i < m; ++i) all[i] = i;
    full_ = measured_subnetwork(all);
}

SubNetwork MeasuredGraph::measured_subnetwork(const std::vector<int>& meters) const {
    SubNetwork out;
    for (int i : meters) {
        if (i < 0 || i >= meas_->meter_count()) throw std::runtime_error("unknown meter index");
        out.vertices.insert(out.vertices.end(), vertices_[i].begin(), vertices_[i].end());
        out.edges.insert(out.edges.end(), edges_[i].begin(), edges_[i].end());
    }
    sort_unique(out.vertices);
    sort_unique(out.edges);
    return out;
}

std::optional<int> MeasuredGraph::preferred_flow_meter(int branch) const {
    std::optional<int> real;
    for (int m : edge_meters_[branch]) {
        if (meas_->meter(m).kind != MeterKind::Flow) continue;
        if (meas_->meter(m).pmu_derived) return m;
        real = m;
    }
    return real;
}

bool FeasibleMeasuredTree::contains(BusId v) const {
    return std::binary_search(vertices.begin(), vertices.end(), v);
}

void identify_descendants(FeasibleMeasuredTree& tree, const MeasuredGraph& mg) {
    tree.parent.clear();
    tree.children.clear();
    tree.descendants.clear();
    std::map<BusId, std::vector<BusId>> adj;
    for (const auto& em : tree.edges) {
        const Branch& br = mg.network().branches()[em.branch];
        adj[br.from].push_back(br.to);
        adj[br.to].push_back(br.from);
    }
    for (auto& [v, nb] : adj) std::sort(nb.begin(), nb.end());

    std::deque<BusId> queue{tree.root};
    std::set<BusId> seen{tree.root};
    std::vector<BusId> order;
    tree.children[tree.root];
    while (!queue.empty()) {
        const BusId v = queue.front();
        queue.pop_front();
        order.push_back(v);
        for (BusId w : adj[v]) {
            if (seen.count(w)) continue;
            seen.insert(w);
            tree.parent[w] = v;
            tree.children[v].push_back(w);
            tree.children[w];
            queue.push_back(w);
        }
    }
    // Descendants accumulate bottom-up over the BFS order.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        std::vector<BusId>& d = tree.descendants[*it];
        for (BusId c : tree.children[*it]) {
            d.push_back(c);
            const auto& dc = tree.descendants[c];
            d.insert(d.end(), dc.begin(), dc.end());
        }
        std::sort(d.begin(), d.end());
    }
}

namespace {

// ---------------------------------------------------------------------------
// Matroid intersection between the graphic matroid (forests over the measured
// edges) and the transversal matroid (edge sets matchable to distinct meters
// measuring them). Ground set: the edges measured by the basic set.
// ---------------------------------------------------------------------------

class TreeSearch {
public:
    TreeSearch(const MeasuredGraph& mg, const std::vector<int>& meters)
        : mg_(mg), meters_(meters) {
        // Ground order follows the first appearance over the input meter
        // list; callers vary the list order to diversify the greedy phase.
        std::set<int> edge_set;
        for (int m : meters_)
            for (int e : mg.measured_edges(m))
                if (edge_set.insert(e).second) ground_.push_back(e);
        // meters each ground edge may map to, restricted to the basic set
        edge_options_.resize(ground_.size());
        for (size_t gi = 0; gi < ground_.size(); ++gi) {
            for (size_t mi = 0; mi < meters_.size(); ++mi) {
                const auto& me = mg.measured_edges(meters_[mi]);
                if (std::binary_search(me.begin(), me.end(), ground_[gi]))
                    edge_options_[gi].push_back(static_cast<int>(mi));
            }
        }
    }

    // Largest common independent set; returns ground indices plus the meter
    // matching (per ground index, local meter index).
    std::pair<std::vector<int>, std::vector<int>> run() {
        in_.assign(ground_.size(), false);
        match_of_edge_.assign(ground_.size(), -1);
        match_of_meter_.assign(meters_.size(), -1);
        // Greedy warm start.
        for (size_t g = 0; g < ground_.size(); ++g)
            if (forest_with(g) && try_match(static_cast<int>(g))) in_[g] = true;
        while (augment()) {
        }
        std::vector<int> chosen, match;
        for (size_t g = 0; g < ground_.size(); ++g)
            if (in_[g]) {
                chosen.push_back(static_cast<int>(g));
                match.push_back(match_of_edge_[g]);
            }
        return {chosen, match};
    }

    int ground_edge(int gi) const { return ground_[gi]; }

private:
    bool is_forest(const std::vector<int>& edges) const {
        UnionFind uf;
        for (int g : edges) {
            const Branch& br = mg_.network().branches()[ground_[g]];
            if (!uf.unite(br.from, br.to)) return false;
        }
        return true;
    }

    std::vector<int> current_plus(int add, int remove = -1) const {
        std::vector<int> s;
        for (size_t g = 0; g < ground_.size(); ++g)
            if (in_[g] && static_cast<int>(g) != remove) s.push_back(static_cast<int>(g));
        if (add >= 0) s.push_back(add);
        return s;
    }

    bool forest_with(size_t add, int remove = -1) const {
        return is_forest(current_plus(static_cast<int>(add), remove));
    }

    // Transversal oracle: Kuhn matching over a candidate edge set.
    bool matchable(const std::vector<int>& edges) const {
        std::vector<int> meter_match(meters_.size(), -1);
        for (int g : edges) {
            std::vector<char> visited(meters_.size(), 0);
            if (!kuhn(g, edges, meter_match, visited)) return false;
        }
        return true;
    }

    bool kuhn(int g, const std::vector<int>& edges, std::vector<int>& meter_match,
              std::vector<char>& visited) const {
        for (int mi : edge_options_[g]) {
            if (visited[mi]) continue;
            visited[mi] = 1;
            if (meter_match[mi] < 0 ||
                (std::find(edges.begin(), edges.end(), meter_match[mi]) != edges.end() &&
                 kuhn(meter_match[mi], edges, meter_match, visited))) {
                meter_match[mi] = g;
                return true;
            }
        }
        return false;
    }

    // Incremental matching attempt against the committed matching state.
    bool try_match(int g) {
        std::vector<char> visited(meters_.size(), 0);
        return try_match_rec(g, visited);
    }
    bool try_match_rec(int g, std::vector<char>& visited) {
        for (int mi : edge_options_[g]) {
            if (visited[mi]) continue;
            visited[mi] = 1;
            if (match_of_meter_[mi] < 0 || try_match_rec(match_of_meter_[mi], visited)) {
                match_of_meter_[mi] = g;
                match_of_edge_[g] = mi;
                return true;
            }
        }
        return false;
    }

    bool augment() {
        const size_t n = ground_.size();
        // Exchange digraph BFS from X1 (addable in graphic) to X2 (addable in
        // transversal), shortest path, then flip membership along it.
        std::vector<int> prev(n, -2);
        std::deque<int> queue;
        for (size_t g = 0; g < n; ++g) {
            if (in_[g]) continue;
            if (forest_with(g)) {
                prev[g] = -1;
                queue.push_back(static_cast<int>(g));
            }
        }
        int found = -1;
        std::vector<int> x2;
        {
            for (size_t g = 0; g < n; ++g)
                if (!in_[g] && matchable(current_plus(static_cast<int>(g)))) x2.push_back(static_cast<int>(g));
        }
        auto is_x2 = [&](int g) { return std::find(x2.begin(), x2.end(), g) != x2.end(); };
        while (!queue.empty() && found < 0) {
            const int u = queue.front();
            queue.pop_front();
            if (!in_[u] && is_x2(u)) {
                found = u;
                break;
            }
            if (!in_[u]) {
                // arcs x -> y: I - y + x matchable (transversal exchange)
                for (size_t y = 0; y < n; ++y) {
                    if (!in_[y] || prev[y] != -2) continue;
                    if (matchable(current_plus(u, static_cast<int>(y)))) {
                        prev[y] = u;
                        queue.push_back(static_cast<int>(y));
                    }
                }
            } else {
                // arcs y -> x: I - y + x forest (graphic exchange)
                for (size_t x = 0; x < n; ++x) {
                    if (in_[x] || prev[x] != -2) continue;
                    if (forest_with(x, u)) {
                        prev[x] = u;
                        queue.push_back(static_cast<int>(x));
                    }
                }
            }
        }
        if (found < 0) return false;
        for (int v = found; v != -1; v = prev[v]) in_[v] = !in_[v];
        rebuild_matching();
        return true;
    }

    void rebuild_matching() {
        match_of_edge_.assign(ground_.size(), -1);
        match_of_meter_.assign(meters_.size(), -1);
        for (size_t g = 0; g < ground_.size(); ++g) {
            if (!in_[g]) continue;
            std::vector<char> visited(meters_.size(), 0);
            if (!try_match_rec_committed(static_cast<int>(g), visited))
                throw std::logic_error("matroid intersection invariant violated");
        }
    }
    bool try_match_rec_committed(int g, std::vector<char>& visited) {
        for (int mi : edge_options_[g]) {
            if (visited[mi]) continue;
            visited[mi] = 1;
            if (match_of_meter_[mi] < 0 || try_match_rec_committed(match_of_meter_[mi], visited)) {
                match_of_meter_[mi] = g;
                match_of_edge_[g] = mi;
                return true;
            }
        }
        return false;
    }

    const MeasuredGraph& mg_;
    std::vector<int> meters_;
    std::vector<int> ground_;                    // branch indices
    std::vector<std::vector<int>> edge_options_; // per ground edge, local meter idx
    std::vector<char> in_;
    std::vector<int> match_of_edge_;
    std::vector<int> match_of_meter_;
};

// Classical construction: augment meters one at a time toward edges they
// measure; a new edge is accepted only when it does not close a cycle with
// the edges matched so far (incremental union-find rejection).
std::optional<FeasibleMeasuredTree> max_flow_backend(const MeasuredGraph& mg,
                                                     const std::vector<int>& meters, BusId root) {
    std::map<int, int> edge_to_meter;  // branch -> meter
    for (int m : meters) {
        // Augmenting search from meter m. Path terminals are unmatched edges
        // that keep the matched edge set acyclic.
        std::set<int> visited_meters;
        std::vector<std::pair<int, int>> path;  // (meter, edge)
        std::function<bool(int)> dfs = [&](int meter) -> bool {
            visited_meters.insert(meter);
            for (int e : mg.measured_edges(meter)) {
                auto it = edge_to_meter.find(e);
                if (it == edge_to_meter.end()) {
                    UnionFind uf;
                    bool acyclic = true;
                    for (const auto& [be, bm] : edge_to_meter) {
                        (void)bm;
                        const Branch& br = mg.network().branches()[be];
                        uf.unite(br.from, br.to);
                    }
                    const Branch& br = mg.network().branches()[e];
                    if (!uf.unite(br.from, br.to)) acyclic = false;
                    if (!acyclic) continue;
                    path.push_back({meter, e});
                    return true;
                }
            }
            for (int e : mg.measured_edges(meter)) {
                const int owner = edge_to_meter.at(e);
                if (visited_meters.count(owner)) continue;
                if (dfs(owner)) {
                    path.push_back({meter, e});
                    return true;
                }
            }
            return false;
        };
        if (!dfs(m)) return std::nullopt;
        for (const auto& [mm, ee] : path) edge_to_meter[ee] = mm;
    }

    FeasibleMeasuredTree tree;
    tree.root = root;
    for (const auto& [e, m] : edge_to_meter) {
        tree.edges.push_back({e, m});
        const Branch& br = mg.network().branches()[e];
        tree.vertices.push_back(br.from);
        tree.vertices.push_back(br.to);
    }
    sort_unique(tree.vertices);
    std::string why;
    identify_descendants(tree, mg);
    if (!validate_tree(mg, tree, &why)) return std::nullopt;
    return tree;
}

}  // namespace

std::optional<FeasibleMeasuredTree> construct_feasible_tree(const MeasuredGraph& mg,
                                                            const std::vector<int>& basic_meters,
                                                            BusId root, TreeBackend backend) {
    if (basic_meters.empty()) {
        FeasibleMeasuredTree tree;
        tree.root = root;
        tree.vertices = {root};
        identify_descendants(tree, mg);
        return tree;
    }
    if (backend == TreeBackend::MaxFlow) return max_flow_backend(mg, basic_meters, root);

    TreeSearch search(mg, basic_meters);
    auto [chosen, match] = search.run();
    if (chosen.size() != basic_meters.size()) return std::nullopt;

    FeasibleMeasuredTree tree;
    tree.root = root;
    for (size_t i = 0; i < chosen.size(); ++i) {
        const int branch = search.ground_edge(chosen[i]);
        tree.edges.push_back({branch, basic_meters[match[i]]});
        const Branch& br = mg.network().branches()[branch];
        tree.vertices.push_back(br.from);
        tree.vertices.push_back(br.to);
    }
    sort_unique(tree.vertices);
    identify_descendants(tree, mg);
    std::string why;
    if (!validate_tree(mg, tree, &why)) return std::nullopt;
    return tree;
}

bool validate_tree(const MeasuredGraph& mg, const FeasibleMeasuredTree& tree, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    std::set<int> meters;
    UnionFind uf;
    std::set<BusId> touched;
    for (const auto& em : tree.edges) {
        if (!meters.insert(em.meter).second) return fail("meter mapped to two edges");
        const auto& measurable = mg.meters_measuring_edge(em.branch);
        if (std::find(measurable.begin(), measurable.end(), em.meter) == measurable.end())
            return fail("edge mapped to a meter that does not measure it");
        const Branch& br = mg.network().branches()[em.branch];
        if (!uf.unite(br.from, br.to)) return fail("tree edges contain a cycle");
        touched.insert(br.from);
        touched.insert(br.to);
    }
    if (!tree.edges.empty()) {
        const BusId first = *touched.begin();
        for (BusId v : touched)
            if (uf.find(v) != uf.find(first)) return fail("tree edges are disconnected");
        if (!touched.count(tree.root)) return fail("root not spanned by tree edges");
    }
    // Vertex set must equal the measured vertices of the mapped meters.
    std::vector<int> mapped;
    for (const auto& em : tree.edges) mapped.push_back(em.meter);
    SubNetwork sub = mg.measured_subnetwork(mapped);
    std::vector<BusId> expect = sub.vertices;
    if (tree.edges.empty()) expect = {tree.root};
    if (expect != tree.vertices) return fail("vertex set differs from measured vertices");
    if (!tree.contains(tree.root)) return fail("root missing from vertex set");
    if (static_cast<int>(tree.vertices.size()) != tree.edge_count() + 1)
        return fail("edge count does not match vertex count");
    return true;
}

}  // namespace gridsec
