#include "kdvlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "kdvlab/errors.hpp"
#include "kdvlab/parallel.hpp"

namespace kdvlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMarginalTolerance = 1e-9;
// Remaining supply/demand below this is treated as exhausted.
constexpr double kMassEps = 1e-14;

void check_marginals(const CostMatrix& c, std::span<const double> a, std::span<const double> b) {
  if (a.size() != c.rows || b.size() != c.cols || a.empty() || b.empty()) {
    throw ContractError("marginal sizes do not match the cost matrix");
  }
  auto check = [](std::span<const double> w, const char* which) {
    double total = 0.0;
    for (double x : w) {
      if (!(x >= 0.0)) throw ContractError(std::string(which) + " marginal has a negative weight");
      total += x;
    }
    if (std::abs(total - 1.0) > kMarginalTolerance) {
      throw ContractError(std::string(which) + " marginal is not normalized (sum " +
                          std::to_string(total) + ")");
    }
  };
  check(a, "source");
  check(b, "target");
}

double distance_pow(double d, double p) { return p == 1.0 ? d : (p == 2.0 ? d * d : std::pow(d, p)); }

std::vector<double> sobolev_weights(std::size_t m, double s) {
  std::vector<double> w(m);
  for (std::size_t k = 1; k <= m; ++k) w[k - 1] = std::pow(static_cast<double>(k), 2.0 * s);
  return w;
}

double weighted_distance(const TorusField& x, const TorusField& y, const std::vector<double>& w) {
  const std::size_t mx = x.cutoff(), my = y.cutoff();
  const std::size_t m = std::max(mx, my);
  double sum = 0.0;
  for (std::size_t k = 1; k <= m; ++k) {
    const Complex xv = k <= mx ? x[k] : Complex{};
    const Complex yv = k <= my ? y[k] : Complex{};
    sum += w[k - 1] * std::norm(xv - yv);
  }
  return std::sqrt(4.0 * sum / std::numbers::pi);
}

// Cost matrix restricted to the positive-weight supports.
struct SupportProblem {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<double> a;
  std::vector<double> b;
  CostMatrix cost;
};

SupportProblem support_problem(const WeightedEnsemble& ea, const WeightedEnsemble& eb, double s,
                               double p) {
  SupportProblem sp;
  sp.rows = ea.support_indices();
  sp.cols = eb.support_indices();
  for (auto i : sp.rows) sp.a.push_back(ea.weight(i));
  for (auto j : sp.cols) sp.b.push_back(eb.weight(j));
  const auto w = sobolev_weights(std::max(ea.cutoff(), eb.cutoff()), s);
  sp.cost.rows = sp.rows.size();
  sp.cost.cols = sp.cols.size();
  sp.cost.s = s;
  sp.cost.p = p;
  sp.cost.entries.resize(sp.cost.rows * sp.cost.cols);
  for (std::size_t r = 0; r < sp.rows.size(); ++r) {
    for (std::size_t c = 0; c < sp.cols.size(); ++c) {
      const double d = weighted_distance(ea.sample(sp.rows[r]), eb.sample(sp.cols[c]), w);
      sp.cost.entries[r * sp.cost.cols + c] = distance_pow(d, p);
    }
  }
  return sp;
}

TransportResult lift(TransportResult r, const SupportProblem& sp, std::size_t rows,
                     std::size_t cols, const WeightedEnsemble& ea, const WeightedEnsemble& eb) {
  for (auto& e : r.plan.entries) {
    e.i = sp.rows[e.i];
    e.j = sp.cols[e.j];
  }
  r.plan.rows = rows;
  r.plan.cols = cols;
  r.row_residual = r.plan.row_residual(ea.weights());
  r.col_residual = r.plan.col_residual(eb.weights());
  return r;
}

TransportPlan dense_to_plan(const std::vector<double>& x, std::size_t n, std::size_t m) {
  TransportPlan plan;
  plan.rows = n;
  plan.cols = m;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (x[i * m + j] > 0.0) plan.entries.push_back({i, j, x[i * m + j]});
    }
  }
  return plan;
}

// Dinic max flow on a small dense graph with real capacities.
class MaxFlow {
 public:
  explicit MaxFlow(std::size_t nodes) : adj_(nodes), level_(nodes), next_(nodes) {}

  std::size_t add_edge(std::size_t u, std::size_t v, double cap) {
    adj_[u].push_back(edges_.size());
    edges_.push_back({v, cap});
    adj_[v].push_back(edges_.size());
    edges_.push_back({u, 0.0});
    return edges_.size() - 2;
  }

  double flow_on(std::size_t edge, double original_cap) const {
    return original_cap - edges_[edge].cap;
  }

  double run(std::size_t s, std::size_t t) {
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(next_.begin(), next_.end(), 0);
      for (double f = dfs(s, t, kInf); f > 0.0; f = dfs(s, t, kInf)) total += f;
    }
    return total;
  }

 private:
  struct Edge {
    std::size_t to;
    double cap;
  };
  static constexpr double kCapEps = 1e-15;

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<std::size_t> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const auto u = q.front();
      q.pop();
      for (auto e : adj_[u]) {
        if (edges_[e].cap > kCapEps && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[u] + 1;
          q.push(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(std::size_t u, std::size_t t, double pushed) {
    if (u == t) return pushed;
    for (auto& i = next_[u]; i < adj_[u].size(); ++i) {
      const auto e = adj_[u][i];
      auto& edge = edges_[e];
      if (edge.cap <= kCapEps || level_[edge.to] != level_[u] + 1) continue;
      const double got = dfs(edge.to, t, std::min(pushed, edge.cap));
      if (got > 0.0) {
        edge.cap -= got;
        edges_[e ^ 1].cap += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> next_;
};

struct BottleneckFlow {
  double flow = 0.0;
  std::vector<double> plan;
};

BottleneckFlow threshold_flow(const CostMatrix& c, std::span<const double> a,
                              std::span<const double> b, double lambda) {
  const std::size_t n = c.rows, m = c.cols;
  const std::size_t source = n + m, sink = n + m + 1;
  MaxFlow g(n + m + 2);
  for (std::size_t i = 0; i < n; ++i) g.add_edge(source, i, a[i]);
  for (std::size_t j = 0; j < m; ++j) g.add_edge(n + j, sink, b[j]);
  std::vector<std::pair<std::size_t, std::size_t>> arcs;  // (edge id, i*m+j)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (c(i, j) <= lambda) arcs.emplace_back(g.add_edge(i, n + j, 2.0), i * m + j);
    }
  }
  BottleneckFlow out;
  out.flow = g.run(source, sink);
  out.plan.assign(n * m, 0.0);
  for (auto [edge, cell] : arcs) {
    const double f = g.flow_on(edge, 2.0);
    if (f > 0.0) out.plan[cell] = f;
  }
  return out;
}

}  // namespace

double CostMatrix::median() const { return quantile(entries, 0.5); }

double field_distance(const TorusField& x, const TorusField& y, double s) {
  return weighted_distance(x, y, sobolev_weights(std::max(x.cutoff(), y.cutoff()), s));
}

CostMatrix cost_matrix(const WeightedEnsemble& a, const WeightedEnsemble& b, double s, double p,
                       std::size_t threads) {
  CostMatrix c;
  c.rows = a.size();
  c.cols = b.size();
  c.s = SobolevIndex(s).value;
  c.p = p;
  c.entries.resize(c.rows * c.cols);
  const auto w = sobolev_weights(std::max(a.cutoff(), b.cutoff()), s);
  parallel_for(c.rows, threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < c.cols; ++j) {
      c.entries[i * c.cols + j] = distance_pow(weighted_distance(a.sample(i), b.sample(j), w), p);
    }
  });
  return c;
}

std::vector<double> TransportPlan::row_sums() const {
  std::vector<double> r(rows, 0.0);
  for (const auto& e : entries) r[e.i] += e.mass;
  return r;
}

std::vector<double> TransportPlan::col_sums() const {
  std::vector<double> c(cols, 0.0);
  for (const auto& e : entries) c[e.j] += e.mass;
  return c;
}

double TransportPlan::row_residual(std::span<const double> a) const {
  const auto r = row_sums();
  double worst = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) worst = std::max(worst, std::abs(r[i] - a[i]));
  return worst;
}

double TransportPlan::col_residual(std::span<const double> b) const {
  const auto c = col_sums();
  double worst = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) worst = std::max(worst, std::abs(c[j] - b[j]));
  return worst;
}

TransportPlan TransportPlan::diagonal(std::span<const double> weights) {
  TransportPlan plan;
  plan.rows = plan.cols = weights.size();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) plan.entries.push_back({i, i, weights[i]});
  }
  return plan;
}

TransportResult solve_transport_exact(const CostMatrix& c, std::span<const double> a,
                                      std::span<const double> b) {
  check_marginals(c, a, b);
  const std::size_t n = c.rows, m = c.cols, nodes = n + m;
  std::vector<double> supply(a.begin(), a.end()), demand(b.begin(), b.end());
  std::vector<double> x(n * m, 0.0), potential(nodes, 0.0), dist(nodes);
  std::vector<std::ptrdiff_t> prev(nodes);
  std::vector<char> done(nodes);

  auto any_left = [](const std::vector<double>& v) {
    return std::any_of(v.begin(), v.end(), [](double r) { return r > kMassEps; });
  };

  TransportResult result;
  result.backend = "exact";
  const std::size_t cap = 50 * (nodes + 10);
  while (any_left(supply) && any_left(demand)) {
    if (++result.iterations > cap) throw ConvergenceError("exact transport stalled", 0.0);

    // Dijkstra on reduced costs from every source with remaining supply.
    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (supply[i] > kMassEps) dist[i] = 0.0;
    }
    std::ptrdiff_t target = -1;
    for (;;) {
      std::ptrdiff_t u = -1;
      for (std::size_t v = 0; v < nodes; ++v) {
        if (!done[v] && dist[v] < kInf && (u < 0 || dist[v] < dist[u])) u = static_cast<std::ptrdiff_t>(v);
      }
      if (u < 0) break;
      done[u] = 1;
      const auto uu = static_cast<std::size_t>(u);
      if (uu >= n) {
        if (demand[uu - n] > kMassEps) {
          target = u;
          break;
        }
        const std::size_t j = uu - n;
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i * m + j] <= 0.0 || done[i]) continue;
          const double nd = dist[uu] - c(i, j) + potential[uu] - potential[i];
          if (nd < dist[i]) {
            dist[i] = nd;
            prev[i] = u;
          }
        }
      } else {
        for (std::size_t j = 0; j < m; ++j) {
          if (done[n + j]) continue;
          const double nd = dist[uu] + c(uu, j) + potential[uu] - potential[n + j];
          if (nd < dist[n + j]) {
            dist[n + j] = nd;
            prev[n + j] = u;
          }
        }
      }
    }
    if (target < 0) throw ContractError("transport problem is infeasible");

    const double reach = dist[target];
    for (std::size_t v = 0; v < nodes; ++v) potential[v] += std::min(dist[v], reach);

    // Bottleneck of the augmenting path.
    double amount = demand[target - static_cast<std::ptrdiff_t>(n)];
    std::ptrdiff_t v = target;
    while (prev[v] >= 0) {
      const auto u = prev[v];
      if (v < static_cast<std::ptrdiff_t>(n)) {  // backward arc sink u -> source v
        amount = std::min(amount, x[v * m + (u - n)]);
      }
      v = u;
    }
    amount = std::min(amount, supply[v]);

    const std::size_t origin = static_cast<std::size_t>(v);
    v = target;
    while (prev[v] >= 0) {
      const auto u = prev[v];
      if (v >= static_cast<std::ptrdiff_t>(n)) {
        x[u * m + (v - n)] += amount;
      } else {
        double& f = x[v * m + (u - n)];
        f -= amount;
        if (f < 1e-16) f = 0.0;
      }
      v = u;
    }
    supply[origin] -= amount;
    demand[target - static_cast<std::ptrdiff_t>(n)] -= amount;
  }

  result.plan = dense_to_plan(x, n, m);
  for (const auto& e : result.plan.entries) result.cost += e.mass * c(e.i, e.j);
  result.cost = std::max(result.cost, 0.0);
  result.distance = c.p == 1.0 ? result.cost : std::pow(result.cost, 1.0 / c.p);
  result.row_residual = result.plan.row_residual(a);
  result.col_residual = result.plan.col_residual(b);
  return result;
}

TransportResult solve_bottleneck(const CostMatrix& c, std::span<const double> a,
                                 std::span<const double> b) {
  check_marginals(c, a, b);
  std::vector<double> levels = c.entries;
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const double required = std::min(std::accumulate(a.begin(), a.end(), 0.0),
                                   std::accumulate(b.begin(), b.end(), 0.0)) - 1e-12;

  TransportResult result;
  result.backend = "bottleneck";
  std::size_t lo = 0, hi = levels.size() - 1;
  BottleneckFlow best = threshold_flow(c, a, b, levels[hi]);
  ++result.iterations;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    BottleneckFlow f = threshold_flow(c, a, b, levels[mid]);
    ++result.iterations;
    if (f.flow >= required) {
      hi = mid;
      best = std::move(f);
    } else {
      lo = mid + 1;
    }
  }
  if (best.flow < required) throw ContractError("bottleneck problem is infeasible");
  result.distance = levels[hi];
  result.plan = dense_to_plan(best.plan, c.rows, c.cols);
  for (const auto& e : result.plan.entries) result.cost += e.mass * c(e.i, e.j);
  result.row_residual = result.plan.row_residual(a);
  result.col_residual = result.plan.col_residual(b);
  return result;
}

TransportResult solve_sinkhorn(const CostMatrix& c, std::span<const double> a,
                               std::span<const double> b, double epsilon,
                               const SinkhornOptions& options) {
  check_marginals(c, a, b);
  if (!(epsilon > 0.0)) throw ContractError("entropic regularization must be positive");
  const std::size_t n = c.rows, m = c.cols;
  std::vector<double> f(n, 0.0), g(m, 0.0), loga(n), logb(m), scratch(std::max(n, m));
  for (std::size_t i = 0; i < n; ++i) loga[i] = a[i] > 0.0 ? std::log(a[i]) : -kInf;
  for (std::size_t j = 0; j < m; ++j) logb[j] = b[j] > 0.0 ? std::log(b[j]) : -kInf;

  auto lse = [&](std::size_t count, auto&& term) {
    double top = -kInf;
    for (std::size_t k = 0; k < count; ++k) top = std::max(top, scratch[k] = term(k));
    if (top == -kInf) return -kInf;
    double sum = 0.0;
    for (std::size_t k = 0; k < count; ++k) sum += std::exp(scratch[k] - top);
    return top + std::log(sum);
  };
  auto update = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) {
      f[i] = eps * (loga[i] - lse(m, [&](std::size_t j) { return (g[j] - c(i, j)) / eps; }));
      if (!std::isfinite(f[i])) f[i] = -kInf;
    }
    for (std::size_t j = 0; j < m; ++j) {
      g[j] = eps * (logb[j] - lse(n, [&](std::size_t i) { return (f[i] - c(i, j)) / eps; }));
      if (!std::isfinite(g[j])) g[j] = -kInf;
    }
  };
  auto row_error = [&](double eps) {
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0;
      for (std::size_t j = 0; j < m; ++j) r += std::exp((f[i] + g[j] - c(i, j)) / eps);
      err += std::abs(r - a[i]);
    }
    return err;
  };

  TransportResult result;
  result.backend = "sinkhorn";
  result.epsilon = epsilon;

  // Epsilon scaling from the cost range down to the target, warm-starting the potentials.
  const double top = *std::max_element(c.entries.begin(), c.entries.end());
  double eps = std::max(epsilon, top);
  double err = kInf;
  for (;;) {
    const bool final_stage = eps <= epsilon;
    const double tol = final_stage ? options.tolerance : 1e-6;
    err = kInf;
    while (err > tol) {
      if (result.iterations >= options.max_iterations) {
        throw ConvergenceError("sinkhorn did not converge", err);
      }
      update(eps);
      ++result.iterations;
      if (result.iterations % 10 == 0 || final_stage) err = row_error(eps);
    }
    if (final_stage) break;
    eps = std::max(epsilon, eps / 4.0);
  }

  // Round onto Marg(a, b): shrink rows and columns to fit, then add the deficit
  // as a rank-one correction.
  std::vector<double> plan(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) plan[i * m + j] = std::exp((f[i] + g[j] - c(i, j)) / epsilon);
  }
  std::vector<double> row(n, 0.0), col(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) row[i] += plan[i * m + j];
    const double scale = row[i] > a[i] ? a[i] / row[i] : 1.0;
    for (std::size_t j = 0; j < m; ++j) plan[i * m + j] *= scale;
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[j] += plan[i * m + j];
    const double scale = col[j] > b[j] ? b[j] / col[j] : 1.0;
    for (std::size_t i = 0; i < n; ++i) plan[i * m + j] *= scale;
  }
  std::fill(row.begin(), row.end(), 0.0);
  std::fill(col.begin(), col.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      row[i] += plan[i * m + j];
      col[j] += plan[i * m + j];
    }
  }
  double deficit = 0.0;
  for (std::size_t i = 0; i < n; ++i) deficit += std::max(0.0, a[i] - row[i]);
  if (deficit > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        plan[i * m + j] += std::max(0.0, a[i] - row[i]) * std::max(0.0, b[j] - col[j]) / deficit;
      }
    }
  }

  result.plan = dense_to_plan(plan, n, m);
  for (const auto& e : result.plan.entries) result.cost += e.mass * c(e.i, e.j);
  result.distance = c.p == 1.0 ? result.cost : std::pow(result.cost, 1.0 / c.p);
  result.row_residual = result.plan.row_residual(a);
  result.col_residual = result.plan.col_residual(b);
  return result;
}

TransportResult wasserstein_p_exact(const WeightedEnsemble& a, const WeightedEnsemble& b,
                                    double s, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ContractError("W_{s,p} requires 1 <= p < inf");
  const auto sp = support_problem(a, b, SobolevIndex(s).value, p);
  return lift(solve_transport_exact(sp.cost, sp.a, sp.b), sp, a.size(), b.size(), a, b);
}

TransportResult wasserstein_p_entropic(const WeightedEnsemble& a, const WeightedEnsemble& b,
                                       double s, double p, double epsilon,
                                       const SinkhornOptions& options) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ContractError("W_{s,p} requires 1 <= p < inf");
  const auto sp = support_problem(a, b, SobolevIndex(s).value, p);
  return lift(solve_sinkhorn(sp.cost, sp.a, sp.b, epsilon, options), sp, a.size(), b.size(), a, b);
}

TransportResult wasserstein_inf(const WeightedEnsemble& a, const WeightedEnsemble& b) {
  const auto sp = support_problem(a, b, 0.0, 1.0);
  return lift(solve_bottleneck(sp.cost, sp.a, sp.b), sp, a.size(), b.size(), a, b);
}

CombinedMetric combined_metric(const WeightedEnsemble& a, const WeightedEnsemble& b, double s,
                               double p, TransportBackend backend, double relative_epsilon) {
  CombinedMetric out;
  out.bottleneck = wasserstein_inf(a, b);
  if (backend == TransportBackend::exact) {
    out.wasserstein = wasserstein_p_exact(a, b, s, p);
  } else {
    const auto sp = support_problem(a, b, SobolevIndex(s).value, p);
    const double med = sp.cost.median();
    const double eps = relative_epsilon * (med > 0.0 ? med : 1.0);
    out.wasserstein =
        lift(solve_sinkhorn(sp.cost, sp.a, sp.b, eps), sp, a.size(), b.size(), a, b);
    out.approximate = true;
  }
  out.value = out.bottleneck.distance + out.wasserstein.distance;
  return out;
}

double plan_cost(const TransportPlan& plan, const WeightedEnsemble& a, const WeightedEnsemble& b,
                 double s, double p) {
  const auto w = sobolev_weights(std::max(a.cutoff(), b.cutoff()), s);
  double total = 0.0;
  for (const auto& e : plan.entries) {
    total += e.mass * distance_pow(weighted_distance(a.sample(e.i), b.sample(e.j), w), p);
  }
  return p == 1.0 ? total : std::pow(total, 1.0 / p);
}

double plan_sup(const TransportPlan& plan, const WeightedEnsemble& a, const WeightedEnsemble& b) {
  const auto w = sobolev_weights(std::max(a.cutoff(), b.cutoff()), 0.0);
  double worst = 0.0;
  for (const auto& e : plan.entries) {
    worst = std::max(worst, weighted_distance(a.sample(e.i), b.sample(e.j), w));
  }
  return worst;
}

PushforwardBound pushforward_cost(const WeightedEnsemble& a, const WeightedEnsemble& b,
                                  const TransportPlan& plan, double t, const SolverConfig& cfg,
                                  double s, double p, std::size_t threads) {
  if (t == 0.0) return {plan_cost(plan, a, b, s, p), plan_sup(plan, a, b)};
  const auto flow = [&](const TorusField& u) { return evolve(u, t, cfg); };
  const WeightedEnsemble at = a.pushforward(flow, threads);
  const WeightedEnsemble bt = b.pushforward(flow, threads);
  return {plan_cost(plan, at, bt, s, p), plan_sup(plan, at, bt)};
}

std::string plan_csv(const TransportPlan& plan, const WeightedEnsemble& a,
                     const WeightedEnsemble& b, double s, double p) {
  std::ostringstream out;
  out.precision(17);
  out << "i,j,mass,cost\n";
  for (const auto& e : plan.entries) {
    out << e.i << ',' << e.j << ',' << e.mass << ','
        << distance_pow(field_distance(a.sample(e.i), b.sample(e.j), s), p) << '\n';
  }
  return out.str();
}

nlohmann::json transport_summary(const TransportResult& r) {
  return {{"distance", r.distance},
          {"cost", r.cost},
          {"backend", r.backend},
          {"epsilon", r.epsilon},
          {"iterations", r.iterations},
          {"marginal_residuals", {{"rows", r.row_residual}, {"cols", r.col_residual}}}};
}

}  // namespace kdvlab
