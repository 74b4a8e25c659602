#include "tfe/nnls.h"

#include <algorithm>
#include <vector>

#include "Eigen/SparseCholesky"

namespace tfe {

namespace {

using sp_mat = Eigen::SparseMatrix<double>;
using vec = Eigen::VectorXd;

vec gradient(sp_mat const& a, vec const& b, double ridge, vec const& x) {
  return 2.0 * (a.transpose() * (a * x - b) + ridge * x);
}

double kkt_of(vec const& x, vec const& g) {
  auto r = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    r = std::max({r, -g[j], std::abs(x[j] * g[j])});
  }
  return r;
}

double spectral_bound(sp_mat const& a, double ridge) {
  if (a.cols() == 0 || a.nonZeros() == 0) {
    return 2.0 * ridge + 1e-12;
  }
  vec v = vec::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
  auto lambda = 0.0;
  for (auto it = 0; it < 100; ++it) {
    vec w = a.transpose() * (a * v);
    auto const n = w.norm();
    if (n == 0.0) {
      break;
    }
    lambda = n;
    v = w / n;
  }
  return 2.0 * (lambda * 1.02 + ridge);
}

// Exact ridge least squares restricted to the columns in `cols`.
bool solve_on_support(sp_mat const& a, vec const& b, double ridge,
                      std::vector<Eigen::Index> const& cols, int max_dim,
                      vec& x) {
  if (cols.empty()) {
    x.setZero();
    return true;
  }
  std::vector<Eigen::Index> row_map(static_cast<std::size_t>(a.rows()), -1);
  std::vector<Eigen::Index> rows;
  for (auto const j : cols) {
    for (sp_mat::InnerIterator it(a, j); it; ++it) {
      if (row_map[static_cast<std::size_t>(it.row())] < 0) {
        row_map[static_cast<std::size_t>(it.row())] =
            static_cast<Eigen::Index>(rows.size());
        rows.push_back(it.row());
      }
    }
  }
  auto const nf = static_cast<Eigen::Index>(cols.size());
  auto const nr = static_cast<Eigen::Index>(rows.size());
  if (std::min(nf, nr) > max_dim) {
    return false;
  }
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index k = 0; k < nf; ++k) {
    for (sp_mat::InnerIterator it(a, cols[static_cast<std::size_t>(k)]); it;
         ++it) {
      trip.emplace_back(row_map[static_cast<std::size_t>(it.row())], k,
                        it.value());
    }
  }
  sp_mat af(nr, nf);
  af.setFromTriplets(begin(trip), end(trip));
  vec bf(nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    bf[r] = b[rows[static_cast<std::size_t>(r)]];
  }
  // Normal equations on the smaller side.
  auto const primal = nf <= nr;
  sp_mat m = primal ? sp_mat(af.transpose() * af)
                    : sp_mat(af * af.transpose());
  sp_mat id(m.rows(), m.cols());
  id.setIdentity();
  m += ridge * id;
  Eigen::SimplicialLDLT<sp_mat> ldlt(m);
  if (ldlt.info() != Eigen::Success) {
    return false;
  }
  vec xf = primal ? vec(ldlt.solve(af.transpose() * bf))
                  : vec(af.transpose() * ldlt.solve(bf));
  if (ldlt.info() != Eigen::Success || !xf.allFinite()) {
    return false;
  }
  x.setZero();
  for (Eigen::Index k = 0; k < nf; ++k) {
    x[cols[static_cast<std::size_t>(k)]] = xf[k];
  }
  return true;
}

}  // namespace

double nnls_objective(sp_mat const& a, vec const& b, double ridge,
                      vec const& x) {
  return (a * x - b).squaredNorm() + ridge * x.squaredNorm();
}

double nnls_kkt_residual(sp_mat const& a, vec const& b, double ridge,
                         vec const& x) {
  return kkt_of(x, gradient(a, b, ridge, x));
}

nnls_result solve_nnls(sp_mat const& a, vec const& b, nnls_options const& opt) {
  nnls_result res;
  auto const n = a.cols();
  res.x_ = vec::Zero(n);
  if (n == 0) {
    res.converged_ = true;
    res.objective_ = b.squaredNorm();
    return res;
  }
  auto const lip = spectral_bound(a, opt.ridge_);
  vec x = vec::Zero(n);
  vec y = x;
  vec x_new(n);
  auto t = 1.0;
  auto kkt = kkt_of(x, gradient(a, b, opt.ridge_, x));
  auto it = 0;
  for (; it < opt.max_iter_ && kkt > opt.tol_; ++it) {
    vec const g = gradient(a, b, opt.ridge_, y);
    x_new = (y - g / lip).cwiseMax(0.0);
    // Adaptive restart when momentum points uphill.
    if ((y - x_new).dot(x_new - x) > 0.0) {
      t = 1.0;
      y = x_new;
    } else {
      auto const t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_new + ((t - 1.0) / t_new) * (x_new - x);
      t = t_new;
    }
    x.swap(x_new);
    if (it % 25 == 24) {
      kkt = kkt_of(x, gradient(a, b, opt.ridge_, x));
    }
  }
  res.iterations_ = it;

  // Support polish: exact solve on the positive set, grown by violators.
  vec best = x;
  auto best_kkt = kkt_of(x, gradient(a, b, opt.ridge_, x));
  if (best_kkt > opt.tol_ * 1e-3) {
    vec cur = x;
    std::vector<Eigen::Index> support;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (cur[j] > 0.0) {
        support.push_back(j);
      }
    }
    for (auto round = 0; round < 20; ++round) {
      vec z(n);
      if (!solve_on_support(a, b, opt.ridge_, support, opt.polish_dim_, z)) {
        break;
      }
      if (z.minCoeff() < 0.0) {
        // Step towards z until the first support entry hits zero.
        auto alpha = 1.0;
        for (auto const j : support) {
          if (z[j] < 0.0) {
            alpha = std::min(alpha, cur[j] / (cur[j] - z[j]));
          }
        }
        cur = (cur + alpha * (z - cur)).cwiseMax(0.0);
        std::erase_if(support, [&](Eigen::Index j) { return cur[j] <= 0.0; });
        continue;
      }
      cur = z;
      vec const g = gradient(a, b, opt.ridge_, cur);
      auto const k = kkt_of(cur, g);
      if (k < best_kkt) {
        best = cur;
        best_kkt = k;
      }
      if (k <= opt.tol_ * 1e-3) {
        break;
      }
      auto added = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (cur[j] <= 0.0 && g[j] < -opt.tol_ * 1e-3) {
          support.push_back(j);
          added = true;
        }
      }
      if (!added) {
        break;
      }
      std::sort(begin(support), end(support));
    }
  }
  res.x_ = best;
  res.kkt_ = best_kkt;
  res.objective_ = nnls_objective(a, b, opt.ridge_, best);
  res.converged_ = best_kkt <= opt.tol_;
  return res;
}

}  // namespace tfe
