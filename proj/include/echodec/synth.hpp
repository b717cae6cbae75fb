#pragma once

// Seeded ground-truth generators: a low-rank + sparse matrix pair for the
// pursuit solver and a patterned echogram cube (migration band, fixed
// layer, daytime midwater blob) for the factorization solvers. Everything
// is bitwise deterministic per seed.

#include <echodec/dates.hpp>
#include <echodec/echogram.hpp>
#include <echodec/rng.hpp>
#include <echodec/types.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace echodec {

template <class Scalar>
struct SynthSpec {
  Index d = 0;        // matrix rows (low-rank/sparse mode)
  Index t = 0;        // columns / days
  Index n_depth = 0;  // cube mode dimensions
  Index n_ping = 0;
  Index n_freq = 0;
  Index rank = 1;            // true K0 (0 allowed: no low-rank part)
  Scalar sparsity = Scalar(0);      // fraction of corrupted entries
  Scalar noise_sigma = Scalar(0);   // additive Gaussian scale
  Scalar smoothness = Scalar(0.1);  // random-walk step scale for H rows
  std::uint64_t seed = 1;

  void validate_matrix() const {
    if (d < 1 || t < 1) throw ParameterError("synth: matrix dims must be >= 1");
    if (rank < 0) throw ParameterError("synth: rank must be >= 0");
    if (sparsity < Scalar(0) || sparsity > Scalar(1))
      throw ParameterError("synth: sparsity must lie in [0, 1]");
  }
  void validate_cube() const {
    if (n_depth < 1 || n_ping < 1 || n_freq < 1 || t < 1)
      throw ParameterError("synth: cube dims must be >= 1");
    if (rank < 1) throw ParameterError("synth: cube mode needs rank >= 1");
    if (sparsity < Scalar(0) || sparsity > Scalar(1))
      throw ParameterError("synth: sparsity must lie in [0, 1]");
  }
};

template <class Scalar>
struct LowrankSparse {
  Matrix<Scalar> l0;  // rank-`rank` ground truth
  Matrix<Scalar> s0;  // sparse corruption
  Matrix<Scalar> x;   // l0 + s0
};

/// L0 = A B^T with standard normal factors; S0 has round(sparsity*D*T)
/// uniformly placed entries drawn uniformly from +-5 max|L0|.
template <class Scalar>
LowrankSparse<Scalar> gen_lowrank_sparse(const SynthSpec<Scalar>& spec) {
  spec.validate_matrix();
  SplitMix64 rng(spec.seed);
  LowrankSparse<Scalar> out;
  if (spec.rank > 0) {
    Matrix<Scalar> a(spec.d, spec.rank), b(spec.t, spec.rank);
    for (Index j = 0; j < spec.rank; ++j)
      for (Index i = 0; i < spec.d; ++i) a(i, j) = static_cast<Scalar>(rng.next_normal());
    for (Index j = 0; j < spec.rank; ++j)
      for (Index i = 0; i < spec.t; ++i) b(i, j) = static_cast<Scalar>(rng.next_normal());
    out.l0 = a * b.transpose();
  } else {
    out.l0 = Matrix<Scalar>::Zero(spec.d, spec.t);
  }

  out.s0 = Matrix<Scalar>::Zero(spec.d, spec.t);
  const Index cells = spec.d * spec.t;
  const auto n_corrupt = static_cast<Index>(
      std::llround(static_cast<double>(spec.sparsity) * static_cast<double>(cells)));
  if (n_corrupt > 0) {
    const Scalar amp = Scalar(5) * (out.l0.size() > 0 ? out.l0.cwiseAbs().maxCoeff() : Scalar(1));
    // Partial Fisher-Yates picks the support without replacement.
    std::vector<Index> slots(static_cast<std::size_t>(cells));
    for (Index i = 0; i < cells; ++i) slots[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < n_corrupt; ++i) {
      const auto pick =
          i + static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(cells - i)));
      std::swap(slots[static_cast<std::size_t>(i)], slots[static_cast<std::size_t>(pick)]);
      const Index cell = slots[static_cast<std::size_t>(i)];
      out.s0(cell % spec.d, cell / spec.d) =
          amp * static_cast<Scalar>(2.0 * rng.next_double() - 1.0);
    }
  }
  out.x = out.l0 + out.s0;
  return out;
}

template <class Scalar>
struct PatternedEchogram {
  Matrix<Scalar> w0;  // D x K0 true daily patterns (flattened)
  Matrix<Scalar> h0;  // K0 x T true activations
  EchogramCube<Scalar> cube;
};

namespace detail {

template <class Scalar>
Scalar gauss_bump(Scalar x, Scalar center, Scalar width) {
  const Scalar z = (x - center) / width;
  return std::exp(Scalar(-0.5) * z * z);
}

}  // namespace detail

/// Builds K0 <= 3 nonnegative daily pattern images (a V-shaped vertical
/// migration band, a fixed shallow layer, a daytime midwater blob) with
/// frequency-dependent amplitudes, drives them with nonnegative smoothed
/// random walks, and packs W0 H0 (+ clipped noise) into a cube.
template <class Scalar>
PatternedEchogram<Scalar> gen_patterned_echogram(const SynthSpec<Scalar>& spec) {
  spec.validate_cube();
  const Index nd = spec.n_depth, np = spec.n_ping, nf = spec.n_freq, nt = spec.t;
  const Index k0 = spec.rank;
  const FeatureLayout layout{nd, np, nf};
  SplitMix64 rng(spec.seed);

  PatternedEchogram<Scalar> out;
  out.w0.resize(layout.features(), k0);
  for (Index k = 0; k < k0; ++k) {
    for (Index f = 0; f < nf; ++f) {
      // Per-pattern spectral trend: rising, flat, falling with frequency.
      const Scalar ff = nf > 1 ? static_cast<Scalar>(f) / static_cast<Scalar>(nf - 1) : Scalar(0);
      Scalar amp;
      switch (k % 3) {
        case 0: amp = Scalar(0.6) + Scalar(0.4) * ff; break;
        case 1: amp = Scalar(1); break;
        default: amp = Scalar(1) - Scalar(0.5) * ff; break;
      }
      for (Index p = 0; p < np; ++p) {
        const Scalar tau = np > 1 ? static_cast<Scalar>(p) / static_cast<Scalar>(np - 1) : Scalar(0.5);
        for (Index d = 0; d < nd; ++d) {
          const Scalar z = nd > 1 ? static_cast<Scalar>(d) / static_cast<Scalar>(nd - 1) : Scalar(0.5);
          Scalar v = Scalar(0);
          switch (k % 3) {
            case 0: {
              // Migration band: deep around mid-day, shallow at the edges.
              const Scalar day_bump =
                  std::sin(static_cast<Scalar>(std::numbers::pi) * tau);
              const Scalar center = Scalar(0.25) + Scalar(0.6) * day_bump;
              v = detail::gauss_bump(z, center, Scalar(0.08));
              break;
            }
            case 1:
              // Fixed shallow layer, constant through the day.
              v = detail::gauss_bump(z, Scalar(0.12), Scalar(0.05));
              break;
            default:
              // Midwater blob present only around mid-day.
              v = detail::gauss_bump(z, Scalar(0.55), Scalar(0.10)) *
                  detail::gauss_bump(tau, Scalar(0.5), Scalar(0.15));
          }
          out.w0(layout.row(d, p, f), k) = amp * v;
        }
      }
    }
  }

  out.h0.resize(k0, nt);
  for (Index k = 0; k < k0; ++k) {
    Scalar level = Scalar(0.6) + Scalar(0.8) * static_cast<Scalar>(rng.next_double());
    for (Index t = 0; t < nt; ++t) {
      out.h0(k, t) = std::max(level, Scalar(0));
      level += spec.smoothness * static_cast<Scalar>(rng.next_normal());
      level = std::max(level, Scalar(0));
    }
  }

  Matrix<Scalar> x = out.w0 * out.h0;
  if (spec.noise_sigma > Scalar(0)) {
    for (Index j = 0; j < x.cols(); ++j)
      for (Index i = 0; i < x.rows(); ++i)
        x(i, j) = std::max(x(i, j) + spec.noise_sigma * static_cast<Scalar>(rng.next_normal()),
                           Scalar(0));
  }

  auto cube = EchogramCube<Scalar>::zeros(nd, np, nf, nt);
  cube.depth_bin_m = Scalar(5);
  cube.time_bin_s = static_cast<Scalar>(86400.0 / static_cast<double>(np));
  for (Index d = 0; d < nd; ++d)
    cube.depth_axis[d] = Scalar(2.5) + Scalar(5) * static_cast<Scalar>(d);
  for (Index p = 0; p < np; ++p)
    cube.time_axis[p] = (static_cast<Scalar>(p) + Scalar(0.5)) * cube.time_bin_s;
  constexpr double base_freqs[3] = {38.0, 120.0, 200.0};
  for (Index f = 0; f < nf; ++f)
    cube.freq_axis[f] =
        f < 3 ? static_cast<Scalar>(base_freqs[f]) : Scalar(200 + 80 * (f - 2));
  for (Index t = 0; t < nt; ++t)
    cube.day_axis[static_cast<std::size_t>(t)] = add_days("2024-01-01", t);
  out.cube = unflatten_matrix(x, cube);
  out.cube.validate();
  return out;
}

}  // namespace echodec
