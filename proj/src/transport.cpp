#include "bitflow/transport.hpp"

#include "bitflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace bitflow {

double assignment_min_cost(const Eigen::MatrixXd& cost, std::vector<int>* match) {
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw ShapeError("assignment_min_cost: square matrix required");
    if (n == 0) return 0.0;

    const double kInf = std::numeric_limits<double>::infinity();
    // 1-indexed potentials; p[j] = row matched to column j (0 = none).
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    if (match) {
        match->assign(n, -1);
        for (int j = 1; j <= n; ++j)
            if (p[j] > 0) (*match)[p[j] - 1] = j - 1;
    }
    double total = 0.0;
    for (int j = 1; j <= n; ++j) total += cost(p[j] - 1, j - 1);
    return total;
}

double transport_min_cost(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    if (n == 0 || m == 0) throw ShapeError("transport_min_cost: empty cost matrix");
    if (static_cast<std::int64_t>(n) * m > 1000000)
        throw CapacityError("transport_min_cost: instance exceeds 10^6 cells");

    // Integer supplies/demands: source i holds m units, sink j wants n units,
    // one unit = mass 1/(n*m). Successive shortest paths with potentials.
    std::vector<std::int64_t> supply(n, m), demand(m, n);
    std::vector<std::int64_t> flow(static_cast<std::size_t>(n) * m, 0);
    auto flow_at = [&](int i, int j) -> std::int64_t& {
        return flow[static_cast<std::size_t>(i) * m + j];
    };

    const double kInf = std::numeric_limits<double>::infinity();
    const int nodes = n + m;  // 0..n-1 sources, n..n+m-1 sinks
    std::vector<double> pot(nodes, 0.0), dist(nodes);
    std::vector<int> prev(nodes);
    std::vector<char> done(nodes);

    std::int64_t remaining = static_cast<std::int64_t>(n) * m;
    while (remaining > 0) {
        std::fill(dist.begin(), dist.end(), kInf);
        std::fill(prev.begin(), prev.end(), -1);
        std::fill(done.begin(), done.end(), 0);
        for (int i = 0; i < n; ++i)
            if (supply[i] > 0) dist[i] = 0.0;

        // Dense Dijkstra over the implicit bipartite residual graph.
        for (int iter = 0; iter < nodes; ++iter) {
            int best = -1;
            double best_d = kInf;
            for (int v = 0; v < nodes; ++v)
                if (!done[v] && dist[v] < best_d) {
                    best_d = dist[v];
                    best = v;
                }
            if (best < 0) break;
            done[best] = 1;
            if (best < n) {
                const int i = best;
                for (int j = 0; j < m; ++j) {
                    const int v = n + j;
                    if (done[v]) continue;
                    double rc = cost(i, j) + pot[i] - pot[v];
                    if (rc < 0.0) rc = 0.0;  // guard fp jitter
                    if (dist[i] + rc < dist[v]) {
                        dist[v] = dist[i] + rc;
                        prev[v] = i;
                    }
                }
            } else {
                const int j = best - n;
                for (int i = 0; i < n; ++i) {
                    if (done[i] || flow_at(i, j) <= 0) continue;
                    double rc = -cost(i, j) + pot[best] - pot[i];
                    if (rc < 0.0) rc = 0.0;
                    if (dist[best] + rc < dist[i]) {
                        dist[i] = dist[best] + rc;
                        prev[i] = best;
                    }
                }
            }
        }

        int target = -1;
        double target_d = kInf;
        for (int j = 0; j < m; ++j)
            if (demand[j] > 0 && dist[n + j] < target_d) {
                target_d = dist[n + j];
                target = n + j;
            }
        if (target < 0)
            throw NumericalError("transport_min_cost: no augmenting path found");

        // Bottleneck: demand at the target, supply at the origin, and flow
        // on every reverse arc along the path.
        std::int64_t push = demand[target - n];
        int origin = target;
        while (prev[origin] >= 0) {
            const int w = prev[origin];
            if (w >= n && origin < n) push = std::min(push, flow_at(origin, w - n));
            origin = w;
        }
        push = std::min(push, supply[origin]);

        for (int v = target; prev[v] >= 0; v = prev[v]) {
            const int w = prev[v];
            if (w < n && v >= n)
                flow_at(w, v - n) += push;
            else
                flow_at(v, w - n) -= push;
        }
        supply[origin] -= push;
        demand[target - n] -= push;
        remaining -= push;

        for (int v = 0; v < nodes; ++v)
            pot[v] += (dist[v] < kInf ? dist[v] : target_d);
    }

    double total = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            total += static_cast<double>(flow_at(i, j)) * cost(i, j);
    return total / (static_cast<double>(n) * static_cast<double>(m));
}

double quantile_coupling_cost(std::vector<double> xs, std::vector<double> ys,
                              int power) {
    if (xs.empty() || ys.empty())
        throw ShapeError("quantile_coupling_cost: empty point set");
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const std::int64_t n = static_cast<std::int64_t>(xs.size());
    const std::int64_t m = static_cast<std::int64_t>(ys.size());

    // Cumulative weights tracked in exact units of 1/(n*m).
    double acc = 0.0;
    std::int64_t cur = 0;
    std::int64_t i = 0, j = 0;
    const std::int64_t total = n * m;
    while (cur < total) {
        const std::int64_t xi_end = (i + 1) * m;
        const std::int64_t yj_end = (j + 1) * n;
        const std::int64_t next = std::min(xi_end, yj_end);
        const double d = std::abs(xs[static_cast<std::size_t>(i)] -
                                  ys[static_cast<std::size_t>(j)]);
        acc += static_cast<double>(next - cur) * (power == 1 ? d : d * d);
        cur = next;
        if (xi_end == next) ++i;
        if (yj_end == next) ++j;
    }
    return acc / static_cast<double>(total);
}

} // namespace bitflow
