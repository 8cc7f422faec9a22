#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

namespace perc {

// Small undirected multigraph on vertices 0..n-1, adjacency in CSR form.
struct AdjGraph {
    int n = 0;
    std::vector<int> head;       // size n+1
    std::vector<int> to;         // size 2m
    std::vector<int> edge_id;    // parallel to `to`

    AdjGraph() = default;
    AdjGraph(int nv, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges)
        : n(nv) {
        head.assign(n + 1, 0);
        for (auto& e : edges) {
            ++head[e.first + 1];
            ++head[e.second + 1];
        }
        for (int i = 0; i < n; ++i) head[i + 1] += head[i];
        to.resize(2 * edges.size());
        edge_id.resize(2 * edges.size());
        std::vector<int> cur(head.begin(), head.end() - 1);
        for (int id = 0; id < static_cast<int>(edges.size()); ++id) {
            auto [a, b] = edges[id];
            to[cur[a]] = static_cast<int>(b);
            edge_id[cur[a]++] = id;
            to[cur[b]] = static_cast<int>(a);
            edge_id[cur[b]++] = id;
        }
    }
};

// Two-edge-connected components via iterative bridge-finding DFS.
// Returns component id per vertex; bridges are exactly the edges whose
// endpoints land in different components.
inline std::vector<int> two_edge_components(const AdjGraph& g) {
    const int n = g.n;
    std::vector<int> disc(n, -1), low(n, 0), comp(n, -1);
    std::vector<int> stack_v, estack;
    std::vector<int> it(n, 0), parent_edge(n, -1);
    int timer = 0, ncomp = 0;
    for (int root = 0; root < n; ++root) {
        if (disc[root] != -1) continue;
        std::vector<int> dfs{root};
        disc[root] = low[root] = timer++;
        estack.push_back(root);
        while (!dfs.empty()) {
            int v = dfs.back();
            if (it[v] < g.head[v + 1] - g.head[v]) {
                int idx = g.head[v] + it[v]++;
                int u = g.to[idx];
                int eid = g.edge_id[idx];
                if (eid == parent_edge[v]) continue;
                if (disc[u] == -1) {
                    disc[u] = low[u] = timer++;
                    parent_edge[u] = eid;
                    estack.push_back(u);
                    dfs.push_back(u);
                } else {
                    low[v] = std::min(low[v], disc[u]);
                }
            } else {
                dfs.pop_back();
                if (!dfs.empty()) {
                    int p = dfs.back();
                    low[p] = std::min(low[p], low[v]);
                }
                if (low[v] == disc[v]) {
                    // v heads a 2-edge-component; pop it
                    while (true) {
                        int u = estack.back();
                        estack.pop_back();
                        comp[u] = ncomp;
                        if (u == v) break;
                    }
                    ++ncomp;
                }
            }
        }
    }
    return comp;
}

// Backbone membership: u belongs iff there are edge-disjoint paths x->u and
// u->y. Equivalently u's 2-edge-connected component lies on the path from
// comp(x) to comp(y) in the bridge tree.
inline std::vector<char> backbone_mask(const AdjGraph& g, int x, int y) {
    if (x < 0 || x >= g.n || y < 0 || y >= g.n)
        throw std::invalid_argument("backbone_mask: endpoint outside graph");
    auto comp = two_edge_components(g);
    int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
    // bridge tree adjacency
    std::vector<std::vector<int>> tadj(ncomp);
    for (int v = 0; v < g.n; ++v)
        for (int idx = g.head[v]; idx < g.head[v + 1]; ++idx) {
            int u = g.to[idx];
            if (comp[v] != comp[u]) tadj[comp[v]].push_back(comp[u]);
        }
    // BFS comp(x) -> comp(y)
    std::vector<int> prev(ncomp, -2);
    std::queue<int> q;
    q.push(comp[x]);
    prev[comp[x]] = -1;
    while (!q.empty()) {
        int c = q.front();
        q.pop();
        if (c == comp[y]) break;
        for (int nb : tadj[c])
            if (prev[nb] == -2) {
                prev[nb] = c;
                q.push(nb);
            }
    }
    std::vector<char> on_path(ncomp, 0);
    if (prev[comp[y]] == -2) return std::vector<char>(g.n, 0);  // x,y disconnected
    for (int c = comp[y]; c != -1; c = prev[c]) on_path[c] = 1;
    std::vector<char> mask(g.n, 0);
    for (int v = 0; v < g.n; ++v) mask[v] = on_path[comp[v]];
    return mask;
}

// Plain BFS max-flow (Edmonds-Karp) on an undirected unit-capacity graph,
// with optional super-source/sink built by the caller. Used as the exact
// reference for backbone membership.
class UnitFlow {
   public:
    explicit UnitFlow(int n) : n_(n), head_(n, -1) {}

    void add_edge(int a, int b, int cap) {
        // undirected: residual structure with cap on both arcs
        arcs_.push_back({b, head_[a], cap});
        head_[a] = static_cast<int>(arcs_.size()) - 1;
        arcs_.push_back({a, head_[b], cap});
        head_[b] = static_cast<int>(arcs_.size()) - 1;
    }

    int max_flow(int s, int t, int need) {
        int total = 0;
        while (total < need) {
            std::vector<int> pre(n_, -1);
            std::vector<int> prearc(n_, -1);
            std::queue<int> q;
            q.push(s);
            pre[s] = s;
            while (!q.empty() && pre[t] == -1) {
                int v = q.front();
                q.pop();
                for (int a = head_[v]; a != -1; a = arcs_[a].next) {
                    if (arcs_[a].cap > 0 && pre[arcs_[a].to] == -1) {
                        pre[arcs_[a].to] = v;
                        prearc[arcs_[a].to] = a;
                        q.push(arcs_[a].to);
                    }
                }
            }
            if (pre[t] == -1) break;
            for (int v = t; v != s; v = pre[v]) {
                int a = prearc[v];
                --arcs_[a].cap;
                ++arcs_[a ^ 1].cap;
            }
            ++total;
        }
        return total;
    }

   private:
    struct Arc {
        int to, next, cap;
    };
    int n_;
    std::vector<int> head_;
    std::vector<Arc> arcs_;
};

// Exhaustive backbone test for one candidate: edge-disjoint x->u and u->y
// paths exist iff a flow of 2 passes from u to a super-sink over {x,y}.
inline bool backbone_member_by_flow(
    int nv, const std::vector<std::pair<std::uint32_t, std::uint32_t>>& edges, int x, int y,
    int u) {
    if (u == x && u == y) return true;
    UnitFlow f(nv + 1);
    for (auto& e : edges) f.add_edge(static_cast<int>(e.first), static_cast<int>(e.second), 1);
    const int sink = nv;
    f.add_edge(x, sink, 1);
    f.add_edge(y, sink, 1);
    return f.max_flow(u, sink, 2) == 2;
}

}  // namespace perc
