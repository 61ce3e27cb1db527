#include "selfstab/drift.hpp"

#include "selfstab/parallel.hpp"
#include "selfstab/rng.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace selfstab {

int DriftGrid::node_count() const {
  int n = 1;
  for (int k : nodes) n *= k;
  return n;
}

DriftField::DriftField(DriftGrid grid, RadialProfile profile, int weight_order)
    : grid_(std::move(grid)), profile_(std::move(profile)), weight_order_(weight_order) {
  const int d = grid_.dim();
  if (d < 1 || d > kMaxDim || static_cast<int>(grid_.nodes.size()) != d) {
    throw PreconditionError("drift grid needs one node count per box axis");
  }
  if (!(grid_.horizon > 0) || grid_.time_steps < 1) {
    throw PreconditionError("drift grid needs a positive horizon and at least one time step");
  }
  for (int a = 0; a < d; ++a) {
    if (grid_.nodes[a] < 2 || !(grid_.box.hi(a) > grid_.box.lo(a))) {
      throw PreconditionError("drift grid axes need >= 2 nodes and lo < hi");
    }
  }
  node_count_ = grid_.node_count();
  strides_.assign(d, 1);
  for (int a = 1; a < d; ++a) strides_[a] = strides_[a - 1] * grid_.nodes[a - 1];
  values_.assign(static_cast<std::size_t>(time_count()) * node_count_ * d, 0.0);
  means_.assign(time_count(), Vec::Zero(d));
}

std::size_t DriftField::offset(int time_index, int node_index) const {
  return (static_cast<std::size_t>(time_index) * node_count_ + node_index) * dim();
}

Vec DriftField::node(int index) const {
  Vec x(dim());
  for (int a = 0; a < dim(); ++a) {
    const int i = (index / strides_[a]) % grid_.nodes[a];
    const double h = (grid_.box.hi(a) - grid_.box.lo(a)) / (grid_.nodes[a] - 1);
    x(a) = i == grid_.nodes[a] - 1 ? grid_.box.hi(a) : grid_.box.lo(a) + h * i;
  }
  return x;
}

Vec DriftField::value(int time_index, int node_index) const {
  return Eigen::Map<const Vec>(values_.data() + offset(time_index, node_index), dim());
}

void DriftField::set_value(int time_index, int node_index, const Vec& v) {
  std::copy(v.data(), v.data() + dim(), values_.data() + offset(time_index, node_index));
}

Vec DriftField::interpolate_space(int time_index, const Vec& x) const {
  const int d = dim();
  int base = 0;
  double weight[kMaxDim];
  for (int a = 0; a < d; ++a) {
    const double h = (grid_.box.hi(a) - grid_.box.lo(a)) / (grid_.nodes[a] - 1);
    const double s = (x(a) - grid_.box.lo(a)) / h;
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, grid_.nodes[a] - 2);
    weight[a] = std::clamp(s - i, 0.0, 1.0);
    base += i * strides_[a];
  }
  Vec out = Vec::Zero(d);
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    int index = base;
    for (int a = 0; a < d; ++a) {
      if (corner & (1 << a)) {
        w *= weight[a];
        index += strides_[a];
      } else {
        w *= 1.0 - weight[a];
      }
    }
    if (w == 0.0) continue;
    const double* v = values_.data() + offset(time_index, index);
    for (int c = 0; c < d; ++c) out(c) += w * v[c];
  }
  return out;
}

Vec DriftField::eval(double t, const Vec& x) const {
  const double T = grid_.horizon;
  if (!(t >= -1e-12 * T && t <= T * (1 + 1e-12))) {
    std::ostringstream msg;
    msg << "drift field queried at t = " << t << " outside [0, " << T << "]";
    throw PreconditionError(msg.str());
  }
  const double s = std::clamp(t / grid_.time_step(), 0.0, static_cast<double>(grid_.time_steps));
  const int k = std::min(static_cast<int>(s), grid_.time_steps - 1);
  const double w = s - k;
  if (!grid_.box.contains(x)) {
    const Vec m = (1.0 - w) * means_[k] + w * means_[k + 1];
    return interaction_force(profile_, x - m);
  }
  if (w == 0.0) return interpolate_space(k, x);
  return (1.0 - w) * interpolate_space(k, x) + w * interpolate_space(k + 1, x);
}

namespace {

double weight(const Vec& x, int q) { return 1.0 + std::pow(x.squaredNorm(), q); }

bool same_grid(const DriftGrid& a, const DriftGrid& b) {
  return a.time_steps == b.time_steps && a.horizon == b.horizon && a.nodes == b.nodes &&
         a.box.lo == b.box.lo && a.box.hi == b.box.hi;
}

}  // namespace

double DriftField::lambda_norm() const {
  double sup = 0.0;
  for (int n = 0; n < node_count_; ++n) {
    const double w = weight(node(n), weight_order_);
    for (int k = 0; k < time_count(); ++k) sup = std::max(sup, value(k, n).norm() / w);
  }
  return sup;
}

double lambda_distance(const DriftField& a, const DriftField& b) {
  if (!same_grid(a.grid(), b.grid())) {
    throw PreconditionError("lambda distance needs fields on the same grid");
  }
  double sup = 0.0;
  for (int n = 0; n < a.node_count(); ++n) {
    const double w = weight(a.node(n), a.weight_order());
    for (int k = 0; k < a.time_count(); ++k) {
      sup = std::max(sup, (a.value(k, n) - b.value(k, n)).norm() / w);
    }
  }
  return sup;
}

Box default_drift_box(const PathSample& flow, double epsilon, double horizon) {
  Box box{flow.states.front(), flow.states.front()};
  for (const Vec& x : flow.states) {
    box.lo = box.lo.cwiseMin(x);
    box.hi = box.hi.cwiseMax(x);
  }
  const double pad = std::max(3.0 * std::sqrt(std::max(epsilon, 0.0) * horizon), 1.0);
  box.lo.array() -= pad;
  box.hi.array() += pad;
  return box;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_row(std::ostream& out, const Vec& v) {
  char buffer[32];
  for (Eigen::Index c = 0; c < v.size(); ++c) {
    const auto r = std::to_chars(buffer, buffer + sizeof buffer, v(c));
    out << ',' << std::string_view(buffer, r.ptr - buffer);
  }
  out << '\n';
}

std::string join(const Vec& v) {
  std::ostringstream out;
  out.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v(i);
  return out.str();
}

std::vector<double> split_numbers(std::string_view text, char sep) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(sep, pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view field = text.substr(pos, end - pos);
    if (!field.empty()) {
      double v = 0;
      const auto r = std::from_chars(field.data(), field.data() + field.size(), v);
      if (r.ec != std::errc() || r.ptr != field.data() + field.size()) {
        throw PreconditionError("malformed number '" + std::string(field) + "' in drift table");
      }
      out.push_back(v);
    }
    pos = end + 1;
  }
  return out;
}

Vec to_vec(const std::vector<double>& values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(static_cast<Eigen::Index>(i)) = values[i];
  return v;
}

}  // namespace

void DriftField::write(std::ostream& out) const {
  out << "# selfstab drift field v1\n";
  out << "# dim=" << dim() << "\n";
  out.precision(17);
  out << "# horizon=" << grid_.horizon << "\n";
  out << "# time_steps=" << grid_.time_steps << "\n";
  out << "# box_lo=" << join(grid_.box.lo) << "\n";
  out << "# box_hi=" << join(grid_.box.hi) << "\n";
  out << "# nodes=";
  for (int a = 0; a < dim(); ++a) out << (a ? " " : "") << grid_.nodes[a];
  out << "\n# weight_order=" << weight_order_ << "\n";
  out << "# profile=" << profile_.describe() << "\n";
  out << "time_index,node_index";
  for (int c = 1; c <= dim(); ++c) out << ",b" << c;
  out << "\n";
  for (int k = 0; k < time_count(); ++k) {
    for (int n = 0; n < node_count_; ++n) {
      out << k << ',' << n;
      write_row(out, value(k, n));
    }
  }
  for (int k = 0; k < time_count(); ++k) {
    out << "mean," << k;
    write_row(out, means_[k]);
  }
}

DriftField DriftField::read(std::istream& in) {
  std::map<std::string, std::string> meta;
  std::string line;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) meta[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (line.rfind("time_index", 0) == 0) continue;
    rows.push_back(line);
  }
  auto require = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw PreconditionError("drift table is missing '# " + key + "='");
    return it->second;
  };
  DriftGrid grid;
  const int dim = std::stoi(require("dim"));
  grid.horizon = std::stod(require("horizon"));
  grid.time_steps = std::stoi(require("time_steps"));
  grid.box = Box{to_vec(split_numbers(require("box_lo"), ' ')),
                 to_vec(split_numbers(require("box_hi"), ' '))};
  for (double n : split_numbers(require("nodes"), ' ')) grid.nodes.push_back(static_cast<int>(n));
  if (grid.box.dim() != dim) throw PreconditionError("drift table box does not match dim");
  DriftField field(grid, RadialProfile::from_description(require("profile")),
                   std::stoi(require("weight_order")));
  std::size_t seen = 0, seen_means = 0;
  for (const std::string& row : rows) {
    const bool is_mean = row.rfind("mean,", 0) == 0;
    const auto numbers = split_numbers(is_mean ? std::string_view(row).substr(5) : row, ',');
    if (static_cast<int>(numbers.size()) != (is_mean ? 1 : 2) + dim) {
      throw PreconditionError("drift table row has the wrong number of columns: " + row);
    }
    const int k = static_cast<int>(numbers[0]);
    if (k < 0 || k >= field.time_count()) throw PreconditionError("time index out of range: " + row);
    if (is_mean) {
      field.set_ensemble_mean(k, to_vec({numbers.begin() + 1, numbers.end()}));
      ++seen_means;
    } else {
      const int n = static_cast<int>(numbers[1]);
      if (n < 0 || n >= field.node_count()) throw PreconditionError("node index out of range: " + row);
      field.set_value(k, n, to_vec({numbers.begin() + 2, numbers.end()}));
      ++seen;
    }
  }
  if (seen != static_cast<std::size_t>(field.time_count()) * field.node_count() ||
      seen_means != static_cast<std::size_t>(field.time_count())) {
    throw PreconditionError("drift table is incomplete");
  }
  return field;
}

// ---------------------------------------------------------------------------
// Gamma and the Picard iteration

Vec EnsembleSnapshot::mean() const {
  Vec m = Vec::Zero(particles.front().size());
  for (const Vec& p : particles) m += p;
  return m / static_cast<double>(particles.size());
}

namespace {

int steps_per_cell(double field_step, double dt) {
  const double ratio = field_step / dt;
  const double rounded = std::round(ratio);
  if (rounded < 1 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw PreconditionError("the Euler step must divide the drift field's time step");
  }
  return static_cast<int>(rounded);
}

// Tabulates (1/M) sum_j Phi(node - X_k^j) for one time index.
void tabulate(DriftField& out, int k, const double* positions, int M) {
  const int d = out.dim();
  const RadialProfile& phi = out.profile();
  Vec mean = Vec::Zero(d);
  for (int j = 0; j < M; ++j) mean += Eigen::Map<const Vec>(positions + j * d, d);
  mean /= M;
  out.set_ensemble_mean(k, mean);
  for (int n = 0; n < out.node_count(); ++n) {
    const Vec x = out.node(n);
    if (phi.is_zero()) {
      out.set_value(k, n, Vec::Zero(d));
    } else if (phi.is_linear()) {
      // E Phi(x - X) = c (x - E X) for Phi(z) = c z.
      out.set_value(k, n, phi.linear_slope() * (x - mean));
    } else {
      Vec acc = Vec::Zero(d);
      for (int j = 0; j < M; ++j) {
        acc += interaction_force(phi, Vec(x - Eigen::Map<const Vec>(positions + j * d, d)));
      }
      out.set_value(k, n, acc / M);
    }
  }
}

}  // namespace

GammaResult gamma_apply(const ModelSpec& model, const DriftField& b, const Vec& x0,
                        double epsilon, int M, std::uint64_t noise_seed,
                        const GammaOptions& options) {
  if (epsilon < 0) throw PreconditionError("epsilon must be nonnegative");
  if (M < 2) throw PreconditionError("gamma_apply needs M >= 2 trajectories");
  if (b.dim() != model.dim() || x0.size() != model.dim()) {
    throw PreconditionError("dimension mismatch between model, field and x0");
  }
  const int d = model.dim();
  const int per_cell = steps_per_cell(b.grid().time_step(), options.dt);
  const double dt = b.grid().time_step() / per_cell;
  const int K = b.time_count();
  const NoisePlan noise(noise_seed, dt);
  const double scale = std::sqrt(epsilon);

  // positions[(k * M + j) * d + c]
  std::vector<double> positions(static_cast<std::size_t>(K) * M * d);
  parallel_for(static_cast<std::size_t>(M), options.workers, [&](std::size_t j) {
    Vec x = x0;
    Vec dw(d);
    std::uint64_t step = 0;
    for (int k = 0;; ++k) {
      std::copy(x.data(), x.data() + d, positions.data() + (static_cast<std::size_t>(k) * M + j) * d);
      if (k == K - 1) break;
      for (int s = 0; s < per_cell; ++s, ++step) {
        const double t = static_cast<double>(step) * dt;
        Vec drift = model.drift(x) - b.eval(t, x);
        x += drift * dt;
        if (scale > 0) {
          noise.increment(j, 0, step, d, dw);
          x += scale * dw;
        }
        if (!x.allFinite() || x.norm() > options.divergence_bound) {
          std::ostringstream msg;
          msg << "trajectory " << j << " (seed " << noise_seed << ") left the divergence bound at t = "
              << t + dt;
          throw DivergenceError(msg.str());
        }
      }
    }
  });

  GammaResult result{DriftField(b.grid(), b.profile(), b.weight_order()), {}};
  parallel_for(static_cast<std::size_t>(K), options.workers, [&](std::size_t k) {
    tabulate(result.field, static_cast<int>(k),
             positions.data() + k * static_cast<std::size_t>(M) * d, M);
  });
  if (options.keep_snapshots) {
    result.snapshots.resize(K);
    for (int k = 0; k < K; ++k) {
      auto& snap = result.snapshots[k];
      snap.time = b.time(k);
      snap.particles.reserve(M);
      for (int j = 0; j < M; ++j) {
        snap.particles.emplace_back(Eigen::Map<const Vec>(
            positions.data() + (static_cast<std::size_t>(k) * M + j) * d, d));
      }
    }
  }
  return result;
}

DriftField limit_field(const ModelSpec& model, const Vec& x0, const DriftGrid& grid, double dt) {
  DriftField field(grid, model.profile(), model.weight_order());
  const PathSample psi = integrate_flow(model, x0, grid.horizon, dt);
  for (int k = 0; k < field.time_count(); ++k) {
    const Vec m = psi.at(field.time(k));
    field.set_ensemble_mean(k, m);
    for (int n = 0; n < field.node_count(); ++n) {
      field.set_value(k, n, interaction_force(model, Vec(field.node(n) - m)));
    }
  }
  return field;
}

SolveResult solve_self_consistent_drift(const ModelSpec& model, const Vec& x0, double epsilon,
                                        const DriftGrid& grid, int M, std::uint64_t noise_seed,
                                        const SolveOptions& options) {
  if (!(options.tol > 0)) throw PreconditionError("tol must be positive");
  SolveResult result{limit_field(model, x0, grid, options.gamma.dt), {}, false};
  for (int i = 1; i <= options.max_iter; ++i) {
    const std::uint64_t seed = options.fresh_noise ? noise_seed + static_cast<std::uint64_t>(i) : noise_seed;
    DriftField next = gamma_apply(model, result.field, x0, epsilon, M, seed, options.gamma).field;
    PicardRecord record;
    record.iteration = i;
    record.increment = lambda_distance(next, result.field);
    record.ratio = result.log.empty() || result.log.back().increment == 0
                       ? 0.0
                       : record.increment / result.log.back().increment;
    record.lambda_norm = next.lambda_norm();
    result.log.push_back(record);
    result.field = std::move(next);
    if (record.increment <= options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

LimitDrift::LimitDrift(const ModelSpec& model, const Vec& x0, double horizon, double dt)
    : profile_(model.profile()), flow_(integrate_flow(model, x0, horizon, dt)) {}

Vec LimitDrift::operator()(double t, const Vec& x) const {
  if (t < 0 || t > flow_.horizon() * (1 + 1e-12)) {
    std::ostringstream msg;
    msg << "limit drift queried at t = " << t << " beyond the cached horizon " << flow_.horizon();
    throw PreconditionError(msg.str());
  }
  return interaction_force(profile_, x - flow_.at(std::min(t, flow_.horizon())));
}

}  // namespace selfstab
