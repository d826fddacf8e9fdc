#include "icorr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace icorr {

void LossWeights::validate() const {
  if (cd < 0 || emd < 0 || nor < 0 || smo < 0)
    throw ConfigError("loss weights must be nonnegative");
}

std::string LossReport::to_json_line() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["occ"] = occ;
  j["sr"] = sr;
  j["cd"] = cd;
  j["emd"] = emd;
  j["nor"] = nor;
  j["smo"] = smo;
  j["cr"] = cr;
  j["total"] = total;
  j["occ_mean"] = occ_mean;
  j["sr_mean"] = sr_mean;
  j["active"] = {{"cd", active.cd}, {"emd", active.emd}, {"nor", active.nor}, {"smo", active.smo}};
  return j.dump();
}

double chamfer_distance(const Matrix3X& a, const Matrix3X& b) {
  if (a.rows() == 0 || b.rows() == 0) throw DataError("chamfer_distance: empty point set");
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    total += (b.rowwise() - a.row(i)).rowwise().squaredNorm().minCoeff();
  for (Eigen::Index j = 0; j < b.rows(); ++j)
    total += (a.rowwise() - b.row(j)).rowwise().squaredNorm().minCoeff();
  return total;
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols() || cost.rows() == 0)
    throw DataError("solve_assignment: cost matrix must be square and nonempty");
  const int n = static_cast<int>(cost.rows());
  const double INF = std::numeric_limits<double>::infinity();
  // Shortest-augmenting-path Hungarian with potentials, 1-based internals.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), INF);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = INF;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
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
    for (;;) {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
      if (j0 == 0) break;
    }
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

namespace {

std::vector<int> subsample_indices(Eigen::Index n, int m, Rng& rng) {
  std::vector<int> idx(n);
  for (Eigen::Index i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < m; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace

double emd_distance(const Matrix3X& a, const Matrix3X& b, Rng* rng, int max_exact) {
  if (a.rows() != b.rows()) throw ConfigError("emd_distance: point sets must have equal size");
  if (a.rows() == 0) throw DataError("emd_distance: empty point set");
  Matrix3X sa = a, sb = b;
  if (a.rows() > max_exact) {
    Rng fallback(0x5eedULL);
    Rng& r = rng ? *rng : fallback;
    auto ia = subsample_indices(a.rows(), max_exact, r);
    auto ib = subsample_indices(b.rows(), max_exact, r);
    sa.resize(max_exact, 3);
    sb.resize(max_exact, 3);
    for (int i = 0; i < max_exact; ++i) {
      sa.row(i) = a.row(ia[i]);
      sb.row(i) = b.row(ib[i]);
    }
  }
  const int n = static_cast<int>(sa.rows());
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    cost.row(i) = (sb.rowwise() - sa.row(i)).rowwise().norm().transpose();
  std::vector<int> match = solve_assignment(cost);
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost(i, match[i]);
  return total;
}

double normal_loss(const Matrix3X& na, const Matrix3X& na_rec, const Matrix3X& nb,
                   const Matrix3X& nb_rec) {
  auto d_nor = [](const Matrix3X& n, const Matrix3X& nr) {
    if (n.rows() != nr.rows()) throw DataError("normal_loss: paired sets must have equal length");
    if (n.rows() == 0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n.rows(); ++i) s += 1.0 - n.row(i).dot(nr.row(i));
    return s / static_cast<double>(n.rows());
  };
  return d_nor(na, na_rec) + d_nor(nb, nb_rec);
}

std::vector<std::vector<int>> knn_neighborhoods(const Matrix3X& points, int m) {
  const Eigen::Index n = points.rows();
  if (m < 1 || m >= n) throw ConfigError("knn_neighborhoods: need 1 <= m < point count");
  std::vector<std::vector<int>> out(n);
  parallel_for(n, [&](int64_t i) {
    Eigen::VectorXd d2 = (points.rowwise() - points.row(i)).rowwise().squaredNorm();
    std::vector<int> order(n);
    for (Eigen::Index j = 0; j < n; ++j) order[j] = static_cast<int>(j);
    std::partial_sort(order.begin(), order.begin() + m + 1, order.end(),
                      [&](int x, int y) { return d2(x) < d2(y) || (d2(x) == d2(y) && x < y); });
    std::vector<int>& nbr = out[i];
    for (int j = 0; j < static_cast<int>(n) && static_cast<int>(nbr.size()) < m; ++j)
      if (order[j] != static_cast<int>(i)) nbr.push_back(order[j]);
  });
  return out;
}

double smooth_loss(const Matrix3X& offsets_ab, const std::vector<std::vector<int>>& nbr_a,
                   const Matrix3X& offsets_ba, const std::vector<std::vector<int>>& nbr_b) {
  auto one_side = [](const Matrix3X& off, const std::vector<std::vector<int>>& nbr) {
    if (static_cast<Eigen::Index>(nbr.size()) != off.rows())
      throw DataError("smooth_loss: neighborhood list size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < nbr.size(); ++i) {
      for (int j : nbr[i]) {
        if (j < 0 || j >= off.rows()) throw DataError("smooth_loss: neighborhood index out of range");
        s += (off.row(i) - off.row(j)).norm();
      }
    }
    return s;
  };
  return one_side(offsets_ab, nbr_a) + one_side(offsets_ba, nbr_b);
}

std::vector<int> nearest_indices(const Matrix3X& queries, const Matrix3X& pool) {
  if (pool.rows() == 0) throw DataError("nearest_indices: empty pool");
  std::vector<int> idx(queries.rows());
  parallel_for(queries.rows(), [&](int64_t i) {
    Eigen::Index best;
    (pool.rowwise() - queries.row(i)).rowwise().squaredNorm().minCoeff(&best);
    idx[i] = static_cast<int>(best);
  });
  return idx;
}

namespace {

using ad::Ref;
using ad::Tape;

// Chamfer term between a constant point set and a reconstructed node.
Ref taped_chamfer(Tape& t, const Matrix3X& s, Ref s_rec) {
  const Eigen::MatrixXd rec = t.val(s_rec);  // copy: pushing nodes may reallocate
  std::vector<int> fwd = nearest_indices(s, rec);          // argmin over rec per s row
  Matrix3X rec_m = rec;
  std::vector<int> bwd = nearest_indices(rec_m, s);        // argmin over s per rec row
  Ref s_const = t.constant(s);
  Ref term1 = t.sumsq(t.sub(s_const, t.gather_rows(s_rec, fwd)));
  Eigen::MatrixXd s_b(rec.rows(), 3);
  for (Eigen::Index i = 0; i < rec.rows(); ++i) s_b.row(i) = s.row(bwd[i]);
  Ref term2 = t.sumsq(t.sub(s_rec, t.constant(s_b)));
  return t.add(term1, term2);
}

Ref taped_emd(Tape& t, const Matrix3X& s, Ref s_rec, int max_exact, Rng& rng) {
  const Eigen::MatrixXd rec = t.val(s_rec);  // copy: pushing nodes may reallocate
  int n = static_cast<int>(std::min(s.rows(), rec.rows()));
  std::vector<int> ia, ib;
  if (n > max_exact) {
    ia = subsample_indices(s.rows(), max_exact, rng);
    ib = subsample_indices(rec.rows(), max_exact, rng);
    n = max_exact;
  } else {
    for (int i = 0; i < n; ++i) {
      ia.push_back(i);
      ib.push_back(i);
    }
  }
  Eigen::MatrixXd sa(n, 3), sb(n, 3);
  for (int i = 0; i < n; ++i) {
    sa.row(i) = s.row(ia[i]);
    sb.row(i) = rec.row(ib[i]);
  }
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    cost.row(i) = (sb.rowwise() - sa.row(i)).rowwise().norm().transpose();
  std::vector<int> match = solve_assignment(cost);
  std::vector<int> matched_rec(n);
  for (int i = 0; i < n; ++i) matched_rec[i] = ib[match[i]];
  Ref diff = t.sub(t.constant(sa), t.gather_rows(s_rec, matched_rec));
  return t.sum(t.rownorm(diff));
}

}  // namespace

LossReport total_loss(const LossBatch& batch, const ParameterStore& params,
                      const LossWeights& weights, int stage, const LossOptions& opts,
                      std::map<std::string, Eigen::MatrixXd>* gradients, Rng* rng) {
  if (stage < 1 || stage > 3) throw ConfigError("total_loss: stage must be 1, 2 or 3");
  weights.validate();
  Rng local_rng(0x10552ULL);
  Rng& r = rng ? *rng : local_rng;

  Tape t;
  TapedModel model(t, params);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(1, 1);
  Ref occ_total = t.constant(zero);
  Ref sr_total = t.constant(zero);
  Ref cd_total = t.constant(zero);
  Ref emd_total = t.constant(zero);
  Ref nor_total = t.constant(zero);
  Ref smo_total = t.constant(zero);

  int64_t occ_points = 0, sr_points = 0;
  double sr_dist_acc = 0.0;
  std::vector<Ref> z(batch.shapes.size());
  std::vector<Ref> pev_s(batch.shapes.size());  // PEVs at the surface points
  for (size_t i = 0; i < batch.shapes.size(); ++i) {
    const ShapeBatchEntry& e = batch.shapes[i];
    z[i] = model.encode(*e.encoder_points);
    if (e.occ_points != nullptr && e.occ_points->rows() > 0) {
      Ref occ = model.occupancy_batch(t.constant(*e.occ_points), z[i]);
      Ref labels = t.constant(Eigen::MatrixXd(*e.occ_labels));
      occ_total = t.add(occ_total, t.sumsq(t.sub(occ, labels)));
      occ_points += e.occ_points->rows();
    }
    if (stage >= 2) {
      pev_s[i] = model.pev(t.constant(*e.surface_points), z[i]);
      Ref rec = model.inverse(pev_s[i], z[i]);
      sr_total = t.add(sr_total, t.sumsq(t.sub(rec, t.constant(*e.surface_points))));
      sr_points += e.surface_points->rows();
      // Per-point Euclidean recovery error, for the log.
      sr_dist_acc += (t.val(rec) - *e.surface_points).rowwise().norm().sum();
    }
  }
  double sr_mean_dist = sr_points > 0 ? sr_dist_acc / static_cast<double>(sr_points) : 0.0;

  if (stage >= 3) {
    for (const auto& [ia, ib] : batch.pairs) {
      const ShapeBatchEntry& A = batch.shapes[ia];
      const ShapeBatchEntry& B = batch.shapes[ib];
      Ref rec_a = model.inverse(pev_s[ib], z[ia]);  // S'_A, indexed like S_B
      Ref rec_b = model.inverse(pev_s[ia], z[ib]);  // S'_B, indexed like S_A
      if (opts.toggles.cd) {
        cd_total = t.add(cd_total, taped_chamfer(t, *A.surface_points, rec_a));
        cd_total = t.add(cd_total, taped_chamfer(t, *B.surface_points, rec_b));
      }
      if (opts.toggles.emd) {
        emd_total = t.add(emd_total, taped_emd(t, *A.surface_points, rec_a, opts.emd_max_exact, r));
        emd_total = t.add(emd_total, taped_emd(t, *B.surface_points, rec_b, opts.emd_max_exact, r));
      }
      if (opts.toggles.nor && A.surface_normals != nullptr && B.surface_normals != nullptr) {
        auto side = [&](const ShapeBatchEntry& target, Ref rec, Ref z_target) {
          std::vector<char> valid;
          Ref normals = model.surface_normals(rec, z_target, &valid, opts.normal_grad_eps);
          // Pair each reconstructed normal with the normal of the nearest
          // target surface point; zero-gradient points are skipped.
          Matrix3X rec_v = t.val(rec);
          std::vector<int> nn = nearest_indices(rec_v, *target.surface_points);
          Eigen::MatrixXd targets(rec_v.rows(), 3);
          Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(rec_v.rows(), 1);
          int count = 0;
          for (Eigen::Index j = 0; j < rec_v.rows(); ++j) {
            targets.row(j) = target.surface_normals->row(nn[j]);
            if (valid[j]) {
              mask(j, 0) = 1.0;
              ++count;
            }
          }
          if (count == 0) return t.constant(zero);
          Ref dots = t.rowdot(normals, t.constant(targets));
          Ref per_point = t.cmul(t.affine(dots, -1.0, 1.0), mask);
          return t.affine(t.sum(per_point), 1.0 / count, 0.0);
        };
        nor_total = t.add(nor_total, side(A, rec_a, z[ia]));
        nor_total = t.add(nor_total, side(B, rec_b, z[ib]));
      }
      if (opts.toggles.smo) {
        auto side = [&](const Matrix3X& source, Ref rec_other) {
          // rec_other is indexed like `source`.
          Ref delta = t.sub(rec_other, t.constant(source));
          auto nbr = knn_neighborhoods(source, std::min<int>(opts.knn_m, static_cast<int>(source.rows()) - 1));
          std::vector<int> center, neigh;
          for (size_t a = 0; a < nbr.size(); ++a)
            for (int b : nbr[a]) {
              center.push_back(static_cast<int>(a));
              neigh.push_back(b);
            }
          Ref diff = t.sub(t.gather_rows(delta, center), t.gather_rows(delta, neigh));
          return t.sum(t.rownorm(diff));
        };
        smo_total = t.add(smo_total, side(*A.surface_points, rec_b));
        smo_total = t.add(smo_total, side(*B.surface_points, rec_a));
      }
    }
  }

  Ref cr = t.constant(zero);
  if (stage >= 3) {
    cr = t.add(t.add(t.affine(cd_total, weights.cd, 0.0), t.affine(emd_total, weights.emd, 0.0)),
               t.add(t.affine(nor_total, weights.nor, 0.0), t.affine(smo_total, weights.smo, 0.0)));
  }
  Ref total = t.add(t.add(occ_total, sr_total), cr);

  if (gradients != nullptr) {
    t.backward(total);
    model.accumulate_gradients(*gradients);
  }

  LossReport rep;
  rep.stage = stage;
  rep.active = opts.toggles;
  rep.occ = t.val(occ_total)(0, 0);
  rep.sr = t.val(sr_total)(0, 0);
  rep.cd = t.val(cd_total)(0, 0);
  rep.emd = t.val(emd_total)(0, 0);
  rep.nor = t.val(nor_total)(0, 0);
  rep.smo = t.val(smo_total)(0, 0);
  rep.cr = t.val(cr)(0, 0);
  rep.total = t.val(total)(0, 0);
  rep.occ_mean = occ_points > 0 ? rep.occ / static_cast<double>(occ_points) : 0.0;
  rep.sr_mean = sr_mean_dist;
  return rep;
}

}  // namespace icorr
