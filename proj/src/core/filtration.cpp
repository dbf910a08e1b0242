#include "hypospec/filtration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "hypospec/error.hpp"
#include "hypospec/parallel.hpp"
#include "hypospec/rng.hpp"

namespace hypospec::filtration {
namespace {

std::string point_string(std::span<const double> x) {
  std::string out = "(";
  char buf[32];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.6g", i ? ", " : "", x[i]);
    out += buf;
  }
  return out + ")";
}

int rank_of(const Eigen::MatrixXd& m) {
  if (m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > kRankTolerance * s[0]) ++r;
  }
  return r;
}

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, out = 0.0;
  while (i > 0) {
    out += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return out;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

double LambdaPoly::evaluate(double delta) const {
  double out = 0.0;
  for (const auto& [deg, c] : coeffs) out += c * std::pow(delta, deg);
  return out;
}

int LambdaPoly::min_degree() const {
  for (const auto& [deg, c] : coeffs) {
    if (c > 0.0) return deg;
  }
  return -1;
}

int numerical_rank(std::span<const std::vector<double>> columns, int dim) {
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (int r = 0; r < dim; ++r) m(r, static_cast<Eigen::Index>(c)) = columns[c][r];
  }
  return rank_of(m);
}

FiltrationPoint tangent_filtration(std::span<const double> x, const vf::BracketTable& table, int depth_cap) {
  if (depth_cap > table.depth()) throw Error(ErrorCode::kInvalidArgument, "depth cap exceeds bracket table depth");
  const int n = table.dim();
  if (static_cast<int>(x.size()) != n) throw DimensionError("point dimension mismatch");
  FiltrationPoint out;
  out.point.assign(x.begin(), x.end());
  std::vector<std::vector<double>> columns;
  std::size_t w = 0;
  const auto& words = table.words();
  for (int j = 1; j <= depth_cap; ++j) {
    for (; w < words.size() && words[w].length() == j; ++w) {
      if (!table.brackets()[w].is_zero()) columns.push_back(table.brackets()[w].evaluate(x));
    }
    const int d = numerical_rank(columns, n);
    out.dims.push_back(d);
    if (d == n) {
      out.tau = j;
      int sum = 0;
      for (int k = 0; k < j - 1; ++k) sum += out.dims[k];
      out.Q = j * n - sum;
      return out;
    }
  }
  throw HormanderFailure(out.point, "brackets of length <= " + std::to_string(depth_cap) + " span only " +
                                        std::to_string(out.dims.empty() ? 0 : out.dims.back()) + " of " +
                                        std::to_string(n) + " dimensions at " + point_string(x));
}

FiltrationPoint tangent_filtration(std::span<const double> x, std::span<const vf::VectorField> fields,
                                   int depth_cap) {
  if (depth_cap < 1 || depth_cap > vf::kDefaultTauCap) {
    throw Error(ErrorCode::kInvalidArgument, "depth cap must lie in [1, " + std::to_string(vf::kDefaultTauCap) + "]");
  }
  return tangent_filtration(x, vf::BracketTable(fields, depth_cap), depth_cap);
}

HomogeneousDimension homogeneous_dimension(std::span<const double> x, std::span<const vf::VectorField> fields,
                                           int depth_cap) {
  const FiltrationPoint fp = tangent_filtration(x, fields, depth_cap);
  return {fp.Q, fp.tau};
}

MultiWordEnumerator::MultiWordEnumerator(const vf::BracketTable& table) : table_(&table) {
  const auto& words = table.words();
  const auto& fields = table.brackets();
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (fields[i].is_zero()) continue;
    const vf::VectorField neg = -fields[i];
    bool merged = false;
    for (WordClass& c : classes_) {
      if (c.length == words[i].length() && (*c.field == fields[i] || *c.field == neg)) {
        ++c.multiplicity;
        merged = true;
        break;
      }
    }
    // Words arrive lexicographically within a length, so the first member is
    // the smallest.
    if (!merged) classes_.push_back({words[i], words[i].length(), 1, &fields[i]});
  }
}

template <typename Visit>
void MultiWordEnumerator::for_each_combination(std::span<const double> x, Visit&& visit) const {
  const int n = table_->dim();
  const int c = static_cast<int>(classes_.size());
  if (c < n) return;
  std::vector<std::vector<double>> values;
  values.reserve(c);
  double scale = 0.0;
  for (const WordClass& wc : classes_) {
    values.push_back(wc.field->evaluate(x));
    double norm = 0.0;
    for (double v : values.back()) norm += v * v;
    scale = std::max(scale, std::sqrt(norm));
  }
  const double det_tol = kRankTolerance * std::pow(scale, n);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Eigen::MatrixXd m(n, n);
  while (true) {
    for (int k = 0; k < n; ++k) {
      for (int r = 0; r < n; ++r) m(r, k) = values[idx[k]][r];
    }
    const double det = m.determinant();
    if (std::abs(det) > det_tol) visit(idx, det);
    int k = n - 1;
    while (k >= 0 && idx[k] == c - n + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int j = k + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
  }
}

LambdaPoly MultiWordEnumerator::lambda_poly(std::span<const double> x) const {
  LambdaPoly out;
  out.point.assign(x.begin(), x.end());
  for_each_combination(x, [&](const std::vector<int>& idx, double det) {
    int deg = 0;
    double mult = 1.0;
    for (int k : idx) {
      deg += classes_[k].length;
      mult *= classes_[k].multiplicity;
    }
    out.coeffs[deg] += mult * std::abs(det);
  });
  if (out.coeffs.empty()) {
    throw HormanderFailure(out.point, "no multi-word has a nonvanishing determinant at " + point_string(x));
  }
  return out;
}

MultiWord MultiWordEnumerator::minimal_frame(std::span<const double> x) const {
  MultiWord best;
  bool found = false;
  for_each_combination(x, [&](const std::vector<int>& idx, double det) {
    MultiWord cand;
    for (int k : idx) {
      cand.words.push_back(classes_[k].representative);
      cand.deg += classes_[k].length;
    }
    std::sort(cand.words.begin(), cand.words.end());
    cand.det = det;
    if (!found || cand.deg < best.deg || (cand.deg == best.deg && cand.words < best.words)) {
      best = std::move(cand);
      found = true;
    }
  });
  if (!found) {
    throw HormanderFailure(std::vector<double>(x.begin(), x.end()),
                           "no multi-word has a nonvanishing determinant at " + point_string(x));
  }
  return best;
}

LambdaPoly lambda_poly(std::span<const double> x, std::span<const vf::VectorField> fields, int depth) {
  const vf::BracketTable table(fields, depth);
  return MultiWordEnumerator(table).lambda_poly(x);
}

MultiWord minimal_frame(std::span<const double> x, std::span<const vf::VectorField> fields, int depth) {
  const vf::BracketTable table(fields, depth);
  return MultiWordEnumerator(table).minimal_frame(x);
}

const FkMass* AuditReport::find_fk(int k) const {
  for (const FkMass& f : fk) {
    if (f.k == k) return &f;
  }
  return nullptr;
}

std::vector<std::pair<std::vector<double>, double>> sample_points(const AuditInput& input, const SampleSpec& spec) {
  const int n = static_cast<int>(input.lower.size());
  if (n == 0 || static_cast<int>(input.upper.size()) != n) throw DimensionError("audit domain bounds mismatch");
  if (input.density.dim() != n) throw DimensionError("density dimension mismatch");
  double volume = 1.0;
  for (int a = 0; a < n; ++a) {
    if (!(input.upper[a] > input.lower[a])) throw Error(ErrorCode::kInvalidArgument, "empty audit domain");
    volume *= input.upper[a] - input.lower[a];
  }
  const bool use_grid = !spec.grid_counts.empty();
  const bool use_qmc = spec.quasi_random > 0;
  if (!use_grid && !use_qmc) throw Error(ErrorCode::kInvalidArgument, "sample spec yields no points");
  if (!spec.probe_counts.empty() && static_cast<int>(spec.probe_counts.size()) != n) {
    throw DimensionError("probe counts must match the chart dimension");
  }
  if (use_grid && static_cast<int>(spec.grid_counts.size()) != n) {
    throw DimensionError("grid sample counts must match the chart dimension");
  }
  if (use_qmc && n > static_cast<int>(std::size(kPrimes))) throw DimensionError("too many dimensions for Halton points");
  const double share = (use_grid && use_qmc) ? 0.5 : 1.0;

  std::vector<std::pair<std::vector<double>, double>> out;
  auto push = [&](std::vector<double> x, double cell) {
    const double h = input.density.evaluate(x);
    if (!(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "density must be positive at " + point_string(x));
    out.emplace_back(std::move(x), share * h * cell);
  };
  if (use_grid) {
    std::size_t total = 1;
    for (int c : spec.grid_counts) {
      if (c < 1) throw Error(ErrorCode::kInvalidArgument, "grid sample counts must be positive");
      total *= static_cast<std::size_t>(c);
    }
    const double cell = volume / static_cast<double>(total);
    std::vector<int> idx(n, 0);
    for (std::size_t s = 0; s < total; ++s) {
      std::vector<double> x(n);
      for (int a = 0; a < n; ++a) {
        x[a] = input.lower[a] + (idx[a] + 0.5) * (input.upper[a] - input.lower[a]) / spec.grid_counts[a];
      }
      push(std::move(x), cell);
      for (int a = n - 1; a >= 0; --a) {
        if (++idx[a] < spec.grid_counts[a]) break;
        idx[a] = 0;
      }
    }
  }
  if (use_qmc) {
    Rng rng(derive_seed(spec.seed, 0));
    std::vector<double> shift(n);
    for (double& s : shift) s = rng.uniform();
    const double cell = volume / spec.quasi_random;
    for (int i = 0; i < spec.quasi_random; ++i) {
      std::vector<double> x(n);
      for (int a = 0; a < n; ++a) {
        double u = radical_inverse(static_cast<std::uint64_t>(i) + 1, kPrimes[a]) + shift[a];
        u -= std::floor(u);
        x[a] = input.lower[a] + u * (input.upper[a] - input.lower[a]);
      }
      push(std::move(x), cell);
    }
  }
  if (!spec.probe_counts.empty()) {
    std::size_t total = 1;
    for (int c : spec.probe_counts) {
      if (c < 1) throw Error(ErrorCode::kInvalidArgument, "probe counts must be positive");
      total *= static_cast<std::size_t>(c);
    }
    std::vector<int> idx(n, 0);
    for (std::size_t s = 0; s < total; ++s) {
      std::vector<double> x(n);
      for (int a = 0; a < n; ++a) {
        x[a] = input.lower[a] + idx[a] * (input.upper[a] - input.lower[a]) / spec.probe_counts[a];
      }
      out.emplace_back(std::move(x), 0.0);
      for (int a = n - 1; a >= 0; --a) {
        if (++idx[a] < spec.probe_counts[a]) break;
        idx[a] = 0;
      }
    }
  }
  return out;
}

AuditReport hormander_audit(const AuditInput& input, const SampleSpec& spec, int workers) {
  if (input.fields.empty()) throw Error(ErrorCode::kInvalidArgument, "audit needs at least one field");
  const int n = input.fields[0].dim();
  if (static_cast<int>(input.lower.size()) != n) throw DimensionError("audit domain dimension mismatch");
  AuditReport report;
  report.dim = n;
  report.samples = spec;
  report.depth_cap = input.depth_cap;

  const auto samples = sample_points(input, spec);
  const vf::BracketTable table(input.fields, input.depth_cap);
  report.points.resize(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    AuditPoint& p = report.points[i];
    p.x = samples[i].first;
    p.weight = samples[i].second;
    try {
      p.filtration = tangent_filtration(p.x, table, input.depth_cap);
    } catch (const HormanderFailure&) {
      p.failed = true;
      p.filtration.point = p.x;
    }
  });

  for (const AuditPoint& p : report.points) {
    report.total_mass += p.weight;
    if (p.failed) {
      report.failures.push_back(p.x);
      continue;
    }
    report.tau_L = std::max(report.tau_L, p.filtration.tau);
    report.Q_L = std::max(report.Q_L, p.filtration.Q);
  }
  const auto weighted = std::count_if(report.points.begin(), report.points.end(),
                                      [](const AuditPoint& p) { return p.weight > 0.0; });
  report.cell_mass = weighted == 0 ? 0.0 : report.total_mass / static_cast<double>(weighted);

  if (report.tau_L > 0) {
    // Lambda uses words up to tau_L so its lowest degree matches Q(x).
    const vf::BracketTable lambda_table(input.fields, report.tau_L);
    const MultiWordEnumerator enumerator(lambda_table);
    parallel_for(report.points.size(), workers, [&](std::size_t i) {
      AuditPoint& p = report.points[i];
      if (!p.failed) p.lambda = enumerator.lambda_poly(p.x);
    });
  }

  for (int k = n; k <= report.Q_L; ++k) {
    FkMass f;
    f.k = k;
    for (const AuditPoint& p : report.points) {
      if (!p.failed && p.filtration.Q >= k) f.mass += p.weight;
    }
    f.measure_zero_candidate = f.mass < report.cell_mass;
    report.fk.push_back(f);
  }
  return report;
}

std::string audit_to_json(const AuditReport& r) {
  nlohmann::ordered_json j;
  j["dim"] = r.dim;
  j["depth_cap"] = r.depth_cap;
  j["tau_L"] = r.tau_L;
  j["Q_L"] = r.Q_L;
  j["total_mass"] = r.total_mass;
  j["cell_mass"] = r.cell_mass;
  j["num_points"] = r.points.size();
  j["samples"] = {{"grid_counts", r.samples.grid_counts},
                  {"quasi_random", r.samples.quasi_random},
                  {"probe_counts", r.samples.probe_counts},
                  {"seed", r.samples.seed}};
  nlohmann::ordered_json fk = nlohmann::ordered_json::array();
  for (const FkMass& f : r.fk) {
    fk.push_back({{"k", f.k}, {"mass", f.mass}, {"measure_zero_candidate", f.measure_zero_candidate}});
  }
  j["Fk_mass"] = fk;
  j["failures"] = r.failures;
  return j.dump(2) + "\n";
}

std::string audit_to_csv(const AuditReport& r) {
  int max_deg = 0;
  for (const AuditPoint& p : r.points) {
    if (!p.lambda.coeffs.empty()) max_deg = std::max(max_deg, p.lambda.coeffs.rbegin()->first);
  }
  std::ostringstream os;
  for (int a = 0; a < r.dim; ++a) os << 'x' << a + 1 << ',';
  os << "tau,Q,lambda_min_deg";
  for (int d = r.dim; d <= max_deg; ++d) os << ",lambda_c" << d;
  os << '\n';
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const AuditPoint& p : r.points) {
    for (double v : p.x) os << num(v) << ',';
    if (p.failed) {
      os << "0,0,-1";
    } else {
      os << p.filtration.tau << ',' << p.filtration.Q << ',' << p.lambda.min_degree();
    }
    for (int d = r.dim; d <= max_deg; ++d) {
      auto it = p.lambda.coeffs.find(d);
      os << ',' << num(it == p.lambda.coeffs.end() ? 0.0 : it->second);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace hypospec::filtration
