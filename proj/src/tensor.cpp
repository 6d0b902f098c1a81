#include "privkey/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace privkey {

RegisterShape::RegisterShape(std::vector<int> d, std::vector<std::string> l)
    : dims(std::move(d)), labels(std::move(l)) {
    for (int x : dims)
        if (x < 1) throw std::invalid_argument("register dimension must be positive");
    if (!labels.empty() && labels.size() != dims.size())
        throw std::invalid_argument("label count does not match subsystem count");
}

long long RegisterShape::total() const {
    long long t = 1;
    for (int d : dims) t *= d;
    return t;
}

RegisterShape RegisterShape::select(const std::vector<int>& idx) const {
    RegisterShape out;
    for (int i : idx) {
        if (i < 0 || i >= count()) throw std::out_of_range("subsystem index out of range");
        out.dims.push_back(dims[i]);
        if (!labels.empty()) out.labels.push_back(labels[i]);
    }
    return out;
}

Mat hermitize(const Mat& m) { return (m + m.adjoint()) / 2.0; }

bool is_hermitian(const Mat& m, double tol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Mat& u, double tol) {
    if (u.rows() != u.cols()) return false;
    Mat g = u.adjoint() * u;
    return (g - Mat::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff() <= tol;
}

Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vec kron(const Vec& a, const Vec& b) {
    Vec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

double xlog2x_sum(const RVec& p, double clip) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p(i) > clip) h -= p(i) * std::log2(p(i));
    return h;
}

RegisterState RegisterState::pure(RegisterShape shape, Vec v, double tol) {
    if (v.size() != shape.total()) throw std::invalid_argument("vector size does not match shape");
    if (std::abs(v.norm() - 1.0) > tol) throw std::invalid_argument("pure state is not normalized");
    RegisterState s;
    s.shape_ = std::move(shape);
    s.pure_ = true;
    s.vec_ = std::move(v);
    s.tol_ = tol;
    return s;
}

RegisterState RegisterState::density(RegisterShape shape, Mat m, double tol) {
    if (m.rows() != m.cols() || m.rows() != shape.total())
        throw std::invalid_argument("density matrix size does not match shape");
    if (!is_hermitian(m, tol)) throw std::invalid_argument("density matrix is not Hermitian");
    Mat h = hermitize(m);
    if (std::abs(h.trace().real() - 1.0) > tol) throw std::invalid_argument("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol) throw std::invalid_argument("density matrix is not PSD");
    RegisterState s;
    s.shape_ = std::move(shape);
    s.pure_ = false;
    s.mat_ = std::move(h);
    s.tol_ = tol;
    return s;
}

RegisterState RegisterState::density_unchecked(RegisterShape shape, Mat m) {
    RegisterState s;
    s.shape_ = std::move(shape);
    s.pure_ = false;
    s.mat_ = std::move(m);
    return s;
}

const Vec& RegisterState::ket() const {
    if (!pure_) throw std::logic_error("state is not pure");
    return vec_;
}

Mat RegisterState::rho() const {
    if (pure_) return vec_ * vec_.adjoint();
    return mat_;
}

RegisterState RegisterState::with_labels(std::vector<std::string> labels) const {
    RegisterState s = *this;
    s.shape_ = RegisterShape(shape_.dims, std::move(labels));
    return s;
}

UnitaryOperator::UnitaryOperator(RegisterShape shape, Mat u, double tol)
    : shape_(std::move(shape)), u_(std::move(u)) {
    if (u_.rows() != shape_.total() || u_.cols() != shape_.total())
        throw std::invalid_argument("unitary size does not match shape");
    if (!is_unitary(u_, tol)) throw std::invalid_argument("operator is not unitary");
}

UnitaryOperator UnitaryOperator::identity(RegisterShape shape) {
    auto d = shape.total();
    return UnitaryOperator(std::move(shape), Mat::Identity(d, d));
}

std::vector<long long> strides_of(const std::vector<int>& dims) {
    std::vector<long long> st(dims.size(), 1);
    for (int i = static_cast<int>(dims.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * dims[i + 1];
    return st;
}

std::vector<int> digits_of(long long idx, const std::vector<int>& dims) {
    std::vector<int> d(dims.size());
    for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
        d[i] = static_cast<int>(idx % dims[i]);
        idx /= dims[i];
    }
    return d;
}

long long index_of(const std::vector<int>& digits, const std::vector<int>& dims) {
    long long idx = 0;
    for (size_t i = 0; i < dims.size(); ++i) idx = idx * dims[i] + digits[i];
    return idx;
}

namespace {

void check_perm(const std::vector<int>& perm, int n) {
    if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("permutation has wrong length");
    std::vector<char> seen(n, 0);
    for (int p : perm) {
        if (p < 0 || p >= n || seen[p]) throw std::invalid_argument("permutation is not a bijection");
        seen[p] = 1;
    }
}

// Maps each input flat index to its position after permuting subsystems.
std::vector<long long> permutation_map(const std::vector<int>& dims, const std::vector<int>& perm) {
    const int n = static_cast<int>(dims.size());
    std::vector<int> out_dims(n);
    for (int j = 0; j < n; ++j) out_dims[j] = dims[perm[j]];
    auto out_st = strides_of(out_dims);
    // input subsystem perm[j] lands at output position j
    std::vector<long long> in_to_out_stride(n);
    for (int j = 0; j < n; ++j) in_to_out_stride[perm[j]] = out_st[j];
    long long total = 1;
    for (int d : dims) total *= d;
    std::vector<long long> map(total);
    std::vector<int> dig(n, 0);
    long long out_idx = 0;
    for (long long idx = 0; idx < total; ++idx) {
        map[idx] = out_idx;
        for (int i = n - 1; i >= 0; --i) {
            ++dig[i];
            out_idx += in_to_out_stride[i];
            if (dig[i] < dims[i]) break;
            out_idx -= in_to_out_stride[i] * dims[i];
            dig[i] = 0;
        }
    }
    return map;
}

// Splits flat indices into (target part, rest part) for a set of target subsystems.
struct Split {
    std::vector<long long> tgt, rest;
    long long dim_t = 1, dim_r = 1;
};

Split split_indices(const std::vector<int>& dims, const std::vector<int>& target) {
    const int n = static_cast<int>(dims.size());
    std::vector<int> pos_in_t(n, -1);
    for (size_t k = 0; k < target.size(); ++k) {
        int t = target[k];
        if (t < 0 || t >= n) throw std::out_of_range("subsystem index out of range");
        if (pos_in_t[t] != -1) throw std::invalid_argument("repeated subsystem index");
        pos_in_t[t] = static_cast<int>(k);
    }
    std::vector<int> tdims, rdims;
    for (int t : target) tdims.push_back(dims[t]);
    for (int i = 0; i < n; ++i)
        if (pos_in_t[i] == -1) rdims.push_back(dims[i]);
    auto tst = strides_of(tdims);
    auto rst = strides_of(rdims);
    std::vector<long long> contrib_t(n, 0), contrib_r(n, 0);
    int r = 0;
    for (int i = 0; i < n; ++i) {
        if (pos_in_t[i] != -1) contrib_t[i] = tst[pos_in_t[i]];
        else contrib_r[i] = rst[r++];
    }
    Split s;
    for (int d : tdims) s.dim_t *= d;
    for (int d : rdims) s.dim_r *= d;
    long long total = s.dim_t * s.dim_r;
    s.tgt.resize(total);
    s.rest.resize(total);
    std::vector<int> dig(n, 0);
    long long ti = 0, ri = 0;
    for (long long idx = 0; idx < total; ++idx) {
        s.tgt[idx] = ti;
        s.rest[idx] = ri;
        for (int i = n - 1; i >= 0; --i) {
            ++dig[i];
            ti += contrib_t[i];
            ri += contrib_r[i];
            if (dig[i] < dims[i]) break;
            ti -= contrib_t[i] * dims[i];
            ri -= contrib_r[i] * dims[i];
            dig[i] = 0;
        }
    }
    return s;
}

}  // namespace

RegisterState kron(const RegisterState& a, const RegisterState& b) {
    RegisterShape shape;
    shape.dims = a.shape().dims;
    shape.dims.insert(shape.dims.end(), b.shape().dims.begin(), b.shape().dims.end());
    if (!a.shape().labels.empty() && !b.shape().labels.empty()) {
        shape.labels = a.shape().labels;
        shape.labels.insert(shape.labels.end(), b.shape().labels.begin(), b.shape().labels.end());
    }
    double tol = std::max(a.tolerance(), b.tolerance());
    if (a.is_pure() && b.is_pure()) return RegisterState::pure(shape, kron(a.ket(), b.ket()), tol);
    return RegisterState::density(shape, kron(a.rho(), b.rho()), tol);
}

UnitaryOperator kron(const UnitaryOperator& a, const UnitaryOperator& b) {
    RegisterShape shape;
    shape.dims = a.shape().dims;
    shape.dims.insert(shape.dims.end(), b.shape().dims.begin(), b.shape().dims.end());
    return UnitaryOperator(shape, kron(a.matrix(), b.matrix()));
}

Vec permute_vector(const Vec& v, const std::vector<int>& dims, const std::vector<int>& perm) {
    check_perm(perm, static_cast<int>(dims.size()));
    auto map = permutation_map(dims, perm);
    Vec out(v.size());
    for (long long i = 0; i < v.size(); ++i) out(map[i]) = v(i);
    return out;
}

Mat permute_matrix(const Mat& m, const std::vector<int>& dims, const std::vector<int>& perm) {
    check_perm(perm, static_cast<int>(dims.size()));
    auto map = permutation_map(dims, perm);
    Mat out(m.rows(), m.cols());
    for (long long i = 0; i < m.rows(); ++i)
        for (long long j = 0; j < m.cols(); ++j) out(map[i], map[j]) = m(i, j);
    return out;
}

RegisterState permute_subsystems(const RegisterState& s, const std::vector<int>& perm) {
    const auto& dims = s.shape().dims;
    check_perm(perm, static_cast<int>(dims.size()));
    RegisterShape shape = s.shape().select(perm);
    if (s.is_pure()) return RegisterState::pure(shape, permute_vector(s.ket(), dims, perm), s.tolerance());
    return RegisterState::density_unchecked(shape, permute_matrix(s.rho(), dims, perm));
}

Mat partial_trace_matrix(const Mat& m, const std::vector<int>& dims, const std::vector<int>& keep) {
    if (keep.empty()) throw std::invalid_argument("keep set must be non-empty");
    std::vector<int> k = keep;
    std::sort(k.begin(), k.end());
    auto sp = split_indices(dims, k);
    // bucket flat indices by their traced-out part
    std::vector<std::vector<std::pair<long long, long long>>> buckets(sp.dim_r);
    for (long long idx = 0; idx < sp.dim_t * sp.dim_r; ++idx) buckets[sp.rest[idx]].push_back({sp.tgt[idx], idx});
    Mat out = Mat::Zero(sp.dim_t, sp.dim_t);
    for (const auto& b : buckets)
        for (const auto& [ti, i] : b)
            for (const auto& [tj, j] : b) out(ti, tj) += m(i, j);
    return out;
}

RegisterState partial_trace(const RegisterState& s, const std::vector<int>& keep) {
    if (keep.empty()) throw std::invalid_argument("keep set must be non-empty");
    std::vector<int> k = keep;
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    RegisterShape shape = s.shape().select(k);
    if (s.is_pure()) {
        auto sp = split_indices(s.shape().dims, k);
        Mat psi = Mat::Zero(sp.dim_t, sp.dim_r);
        const Vec& v = s.ket();
        for (long long idx = 0; idx < v.size(); ++idx) psi(sp.tgt[idx], sp.rest[idx]) = v(idx);
        return RegisterState::density_unchecked(shape, psi * psi.adjoint());
    }
    return RegisterState::density_unchecked(shape, partial_trace_matrix(s.rho(), s.shape().dims, k));
}

Mat apply_left(const Mat& m, const Mat& u, const std::vector<int>& dims, const std::vector<int>& target) {
    auto sp = split_indices(dims, target);
    if (u.rows() != sp.dim_t || u.cols() != sp.dim_t) throw std::invalid_argument("unitary does not match target dims");
    // gather[r][t] = flat index
    std::vector<std::vector<long long>> gather(sp.dim_r, std::vector<long long>(sp.dim_t));
    for (long long idx = 0; idx < sp.dim_t * sp.dim_r; ++idx) gather[sp.rest[idx]][sp.tgt[idx]] = idx;
    Mat out(m.rows(), m.cols());
    Vec buf(sp.dim_t);
    for (long long c = 0; c < m.cols(); ++c) {
        for (long long r = 0; r < sp.dim_r; ++r) {
            for (long long t = 0; t < sp.dim_t; ++t) buf(t) = m(gather[r][t], c);
            Vec y = u * buf;
            for (long long t = 0; t < sp.dim_t; ++t) out(gather[r][t], c) = y(t);
        }
    }
    return out;
}

RegisterState apply_unitary(const RegisterState& s, const UnitaryOperator& u, const std::vector<int>& target) {
    const auto& dims = s.shape().dims;
    std::vector<int> tdims;
    for (int t : target) {
        if (t < 0 || t >= static_cast<int>(dims.size())) throw std::out_of_range("subsystem index out of range");
        tdims.push_back(dims[t]);
    }
    if (tdims != u.shape().dims) throw std::invalid_argument("unitary dims do not match target dims");
    if (s.is_pure()) {
        Mat col = s.ket();
        Mat out = apply_left(col, u.matrix(), dims, target);
        return RegisterState::pure(s.shape(), out.col(0), s.tolerance());
    }
    Mat left = apply_left(s.rho(), u.matrix(), dims, target);
    Mat both = apply_left(left.adjoint(), u.matrix(), dims, target).adjoint();
    return RegisterState::density_unchecked(s.shape(), both);
}

EigResult hermitian_eig(const Mat& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m));
    if (es.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const auto n = m.rows();
    EigResult r;
    r.values.resize(n);
    r.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        r.values(k) = es.eigenvalues()(n - 1 - k);
        r.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
    }
    return r;
}

Mat sqrt_psd(const Mat& h) {
    return spectral_apply(h, [](double x) { return x > kPsdClip ? std::sqrt(x) : 0.0; });
}

Mat pow_on_support(const Mat& h, double p, double clip) {
    return spectral_apply(h, [p, clip](double x) { return x > clip ? std::pow(x, p) : 0.0; });
}

Mat support_projector(const Mat& h, double clip) {
    return spectral_apply(h, [clip](double x) { return x > clip ? 1.0 : 0.0; });
}

double trace_norm(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues().sum();
}

double trace_distance(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("shape mismatch");
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(a - b), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const RegisterState& a, const RegisterState& b) {
    if (!a.shape().same_dims(b.shape())) throw std::invalid_argument("shape mismatch");
    if (a.is_pure() && b.is_pure()) {
        double ov = std::norm(a.ket().dot(b.ket()));
        return std::sqrt(std::max(0.0, 1.0 - ov));
    }
    return std::min(1.0, trace_distance(a.rho(), b.rho()));
}

double fidelity(const Mat& a, const Mat& b) {
    if (a.rows() != b.rows()) throw std::invalid_argument("shape mismatch");
    Mat sa = sqrt_psd(a);
    Mat inner = hermitize(sa * hermitize(b) * sa);
    Eigen::SelfAdjointEigenSolver<Mat> es(inner, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()(i) > 0) s += std::sqrt(es.eigenvalues()(i));
    return std::clamp(s * s, 0.0, 1.0);
}

double fidelity(const RegisterState& a, const RegisterState& b) {
    if (!a.shape().same_dims(b.shape())) throw std::invalid_argument("shape mismatch");
    if (a.is_pure() && b.is_pure()) return std::clamp(std::norm(a.ket().dot(b.ket())), 0.0, 1.0);
    if (a.is_pure()) return std::clamp((a.ket().adjoint() * b.rho() * a.ket())(0, 0).real(), 0.0, 1.0);
    if (b.is_pure()) return std::clamp((b.ket().adjoint() * a.rho() * b.ket())(0, 0).real(), 0.0, 1.0);
    return fidelity(a.rho(), b.rho());
}

double von_neumann_entropy(const Mat& rho) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(rho), Eigen::EigenvaluesOnly);
    return std::max(0.0, xlog2x_sum(es.eigenvalues()));
}

double von_neumann_entropy(const RegisterState& s, const std::optional<std::vector<int>>& subsystems) {
    if (subsystems) {
        if (static_cast<int>(subsystems->size()) == s.shape().count()) return von_neumann_entropy(s, std::nullopt);
        return von_neumann_entropy(partial_trace(s, *subsystems).rho());
    }
    if (s.is_pure()) return 0.0;
    return von_neumann_entropy(s.rho());
}

RegisterState purify(const RegisterState& rho) {
    if (rho.is_pure()) {
        RegisterShape shape = rho.shape();
        shape.dims.push_back(1);
        if (!shape.labels.empty()) shape.labels.push_back("E");
        return RegisterState::pure(shape, rho.ket(), rho.tolerance());
    }
    auto e = hermitian_eig(rho.rho());
    int rank = 0;
    for (Eigen::Index k = 0; k < e.values.size(); ++k)
        if (e.values(k) > kPsdClip) ++rank;
    rank = std::max(rank, 1);
    const long long d = rho.dim();
    Vec v = Vec::Zero(d * rank);
    for (int k = 0; k < rank; ++k) {
        double w = std::sqrt(std::max(0.0, e.values(k)));
        for (long long i = 0; i < d; ++i) v(i * rank + k) = w * e.vectors(i, k);
    }
    v /= v.norm();
    RegisterShape shape = rho.shape();
    shape.dims.push_back(rank);
    if (!shape.labels.empty()) shape.labels.push_back("E");
    return RegisterState::pure(shape, v, 1e-8);
}

std::vector<MeasureOutcome> projective_measure(const RegisterState& s, const std::vector<Vec>& basis,
                                               const std::vector<int>& target) {
    const auto& dims = s.shape().dims;
    long long dt = 1;
    for (int t : target) {
        if (t < 0 || t >= static_cast<int>(dims.size())) throw std::out_of_range("subsystem index out of range");
        dt *= dims[t];
    }
    if (static_cast<long long>(basis.size()) != dt) throw std::invalid_argument("basis is incomplete for target");
    Mat b(dt, dt);
    for (long long k = 0; k < dt; ++k) {
        if (basis[k].size() != dt) throw std::invalid_argument("basis vector has wrong dimension");
        b.col(k) = basis[k];
    }
    if (!is_unitary(b, 1e-9)) throw std::invalid_argument("basis is not orthonormal");

    std::vector<MeasureOutcome> out;
    for (long long k = 0; k < dt; ++k) {
        Mat proj = b.col(k) * b.col(k).adjoint();
        MeasureOutcome o;
        o.label = static_cast<int>(k);
        if (s.is_pure()) {
            Mat col = s.ket();
            Vec v = apply_left(col, proj, dims, target).col(0);
            o.probability = v.squaredNorm();
            if (o.probability > 1e-15) o.post = RegisterState::pure(s.shape(), v / std::sqrt(o.probability), 1e-8);
        } else {
            Mat left = apply_left(s.rho(), proj, dims, target);
            Mat both = apply_left(left.adjoint(), proj, dims, target).adjoint();
            o.probability = std::max(0.0, both.trace().real());
            if (o.probability > 1e-15)
                o.post = RegisterState::density_unchecked(s.shape(), hermitize(both / o.probability));
        }
        out.push_back(std::move(o));
    }
    return out;
}

}  // namespace privkey
