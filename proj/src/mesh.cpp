#include "fss3d/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fss3d/errors.hpp"

namespace fss {

Vec3 TriangleMesh::triangle_normal(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
}

double TriangleMesh::signed_volume() const {
  double v = 0.0;
  for (const auto& tri : triangles)
    v += vertices[tri[0]].cross(vertices[tri[1]]).dot(vertices[tri[2]]) / 6.0;
  return v;
}

bool TriangleMesh::is_closed(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (vertex_count() < 4 || triangle_count() < 4)
    return fail("fewer than 4 vertices or triangles");
  // directed edge -> count; closure requires each undirected edge to appear
  // exactly once per direction
  std::map<std::pair<int, int>, int> directed;
  for (const auto& tri : triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      if (a < 0 || b < 0 || a >= vertex_count() || b >= vertex_count())
        return fail("triangle references an invalid vertex index");
      if (a == b) return fail("degenerate triangle with repeated vertex");
      if (++directed[{a, b}] > 1) return fail("directed edge used twice (inconsistent winding or non-manifold)");
    }
  }
  for (const auto& [e, n] : directed) {
    (void)n;
    if (directed.find({e.second, e.first}) == directed.end())
      return fail("boundary edge found (mesh not closed)");
  }
  return true;
}

void TriangleMesh::orient_outward() {
  if (signed_volume() < 0.0)
    for (auto& tri : triangles) std::swap(tri[1], tri[2]);
}

std::vector<Vec3> patch_centers(const TriangleMesh& m) {
  std::vector<Vec3> c(m.triangle_count());
  for (int t = 0; t < m.triangle_count(); ++t) c[t] = m.triangle_center(t);
  return c;
}

ConnectivityMatrix build_connectivity(const TriangleMesh& m) {
  ConnectivityMatrix C(m.triangle_count(), m.vertex_count());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * m.triangles.size());
  for (int i = 0; i < m.triangle_count(); ++i)
    for (int k = 0; k < 3; ++k) trip.emplace_back(i, m.triangles[i][k], 1.0);
  C.setFromTriplets(trip.begin(), trip.end());
  return C;
}

VertexSolveResult solve_vertex_motions(const ConnectivityMatrix& C, const PatchMotionField& Vc) {
  const int n_tri = static_cast<int>(C.rows());
  const int n_vert = static_cast<int>(C.cols());
  if (Vc.motions.rows() != n_tri)
    throw Error(ErrorCode::InvalidConfig, "solve_vertex_motions: row count mismatch");

  // drop invalid patch rows
  std::vector<int> rows;
  rows.reserve(n_tri);
  for (int i = 0; i < n_tri; ++i)
    if (Vc.valid.empty() || Vc.valid[i]) rows.push_back(i);

  VertexSolveResult out;
  out.motions = VertexMotionField::Zero(n_vert, 3);
  out.unconstrained.assign(n_vert, true);
  if (rows.empty()) return out;

  Eigen::SparseMatrix<double, Eigen::RowMajor> Crow(C);

  // vertices touched by at least one kept row keep their column; the rest
  // would make the normal equations singular and are solved as zero motion
  std::vector<int> vmap(n_vert, -1);
  std::vector<int> kept;
  for (int r : rows)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Crow, r); it; ++it)
      if (vmap[it.col()] < 0) {
        vmap[it.col()] = 0;
        kept.push_back(static_cast<int>(it.col()));
      }
  std::sort(kept.begin(), kept.end());
  for (int i = 0; i < static_cast<int>(kept.size()); ++i) vmap[kept[i]] = i;

  // patch-center motion = mean of the triangle's vertex motions
  ConnectivityMatrix Ck(static_cast<int>(rows.size()), static_cast<int>(kept.size()));
  Eigen::Matrix<double, Eigen::Dynamic, 3> b(rows.size(), 3);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * rows.size());
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Crow, rows[r]); it; ++it)
      trip.emplace_back(r, vmap[it.col()], it.value() / 3.0);
    b.row(r) = Vc.motions.row(rows[r]);
  }
  Ck.setFromTriplets(trip.begin(), trip.end());

  Eigen::Matrix<double, Eigen::Dynamic, 3> x;
  bool solved = false;
  if (Ck.rows() >= Ck.cols()) {
    // overdetermined: normal equations
    ConnectivityMatrix AtA = ConnectivityMatrix(Ck.transpose()) * Ck;
    Eigen::SimplicialLDLT<ConnectivityMatrix> solver(AtA);
    if (solver.info() == Eigen::Success) {
      x = solver.solve(Ck.transpose() * b);
      solved = (solver.info() == Eigen::Success) && x.allFinite();
    }
  } else {
    // underdetermined: minimum-norm solution x = A^T (A A^T)^{-1} b
    ConnectivityMatrix AAt = Ck * ConnectivityMatrix(Ck.transpose());
    Eigen::SimplicialLDLT<ConnectivityMatrix> solver(AAt);
    if (solver.info() == Eigen::Success) {
      Eigen::Matrix<double, Eigen::Dynamic, 3> y = solver.solve(b);
      x = Ck.transpose() * y;
      solved = (solver.info() == Eigen::Success) && x.allFinite();
      out.rank_deficient = true;
    }
  }
  if (!solved) {
    // rank-deficient corner cases: dependable dense minimum-norm solve
    Eigen::MatrixXd Cd(Ck);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Cd, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-10);
    x = svd.solve(Eigen::MatrixXd(b));
    out.rank_deficient = true;
    if (!x.allFinite()) {  // give up rather than propagate garbage
      x.setZero();
      out.residual = b.norm();
    }
  }

  for (int i = 0; i < static_cast<int>(kept.size()); ++i) {
    out.motions.row(kept[i]) = x.row(i);
    out.unconstrained[kept[i]] = false;
  }
  out.residual = (Ck * x - b).norm();
  return out;
}

std::vector<std::vector<int>> vertex_neighbors(const TriangleMesh& m) {
  std::vector<std::vector<int>> nb(m.vertex_count());
  for (const auto& tri : m.triangles)
    for (int k = 0; k < 3; ++k) {
      int a = tri[k], b = tri[(k + 1) % 3];
      nb[a].push_back(b);
      nb[b].push_back(a);
    }
  for (auto& v : nb) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return nb;
}

namespace {
double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}
}  // namespace

MadReplaceResult mad_outlier_replace(const VertexMotionField& V, const TriangleMesh& m,
                                     const MadReplaceConfig& cfg,
                                     const std::vector<bool>* consider) {
  const int n = static_cast<int>(V.rows());
  if (n != m.vertex_count())
    throw Error(ErrorCode::InvalidConfig, "mad_outlier_replace: field size mismatch");
  auto considered = [&](int i) { return !consider || (*consider)[i]; };

  std::vector<double> mag(n), sample;
  sample.reserve(n);
  for (int i = 0; i < n; ++i) {
    mag[i] = V.row(i).norm();
    if (considered(i)) sample.push_back(mag[i]);
  }
  double med = median_of(sample);
  std::vector<double> dev;
  dev.reserve(sample.size());
  for (double s : sample) dev.push_back(std::abs(s - med));
  double mad = median_of(dev);

  MadReplaceResult out;
  out.threshold = med + 3.0 * mad;
  out.motions = V;

  std::vector<bool> outlier(n, false);
  for (int i = 0; i < n; ++i)
    if (considered(i)) outlier[i] = (mad > 0.0) ? (mag[i] > out.threshold) : (mag[i] > med);

  auto nb = vertex_neighbors(m);
  for (int i = 0; i < n; ++i) {
    if (!outlier[i]) continue;
    Vec3 acc = Vec3::Zero();
    double wsum = 0.0;
    for (int j : nb[i]) {
      if (outlier[j] || !considered(j)) continue;
      double d = (m.vertices[i] - m.vertices[j]).norm();
      double w = cfg.inverse_distance ? (d > 1e-12 ? 1.0 / d : 0.0) : d;
      acc += w * Vec3(V.row(j));
      wsum += w;
    }
    if (wsum > 0.0) {
      out.motions.row(i) = acc / wsum;
      out.replaced.push_back(i);
    } else {
      out.motions.row(i).setZero();
      out.zeroed.push_back(i);
    }
  }
  return out;
}

TriangleMesh apply_motions(const TriangleMesh& m, const VertexMotionField& V) {
  if (V.rows() != m.vertex_count())
    throw Error(ErrorCode::InvalidConfig, "apply_motions: field size mismatch");
  TriangleMesh out = m;
  for (int i = 0; i < m.vertex_count(); ++i) out.vertices[i] += Vec3(V.row(i));
  return out;
}

TriangleMesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open mesh file: " + path);
  TriangleMesh m;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "v") {
      Vec3 p;
      ss >> p.x() >> p.y() >> p.z();
      m.vertices.push_back(p);
    } else if (tag == "f") {
      std::array<int, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        std::string tok;
        ss >> tok;
        tri[k] = std::stoi(tok) - 1;  // tolerate "i/..." forms, 1-based
      }
      m.triangles.push_back(tri);
    }
  }
  std::string why;
  if (!m.is_closed(&why)) throw Error(ErrorCode::OpenMesh, "mesh failed closure validation: " + why);
  return m;
}

void save_mesh(const TriangleMesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write mesh file: " + path);
  out.precision(12);
  for (const auto& v : m.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& t : m.triangles)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

}  // namespace fss
