#pragma once

#include <Eigen/Core>
#include <vector>

namespace bitflow {

/// Exact minimum-cost perfect matching on a square cost matrix (shortest
/// augmenting paths with potentials, O(n^3)). Returns the total cost;
/// `match`, when given, receives the column assigned to each row.
double assignment_min_cost(const Eigen::MatrixXd& cost,
                           std::vector<int>* match = nullptr);

/// Exact transportation optimum for uniform marginals: n sources of mass
/// 1/n, m sinks of mass 1/m, cost(i,j) per unit mass. Solved as an integer
/// min-cost flow (supplies m, demands n) by successive shortest paths.
/// Returns the optimal cost per unit of total mass.
double transport_min_cost(const Eigen::MatrixXd& cost);

/// Exact 1-d optimal transport between uniform atomic measures via the
/// monotone quantile coupling; `power` is the cost exponent (1 or 2).
/// Returns the mean coupled cost (not yet rooted).
double quantile_coupling_cost(std::vector<double> xs, std::vector<double> ys,
                              int power);

} // namespace bitflow
