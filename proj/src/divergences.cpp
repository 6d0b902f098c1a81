#include "privkey/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace privkey {

namespace {

void check_pair(const Mat& rho, const Mat& sigma) {
    if (rho.rows() != rho.cols() || sigma.rows() != sigma.cols() || rho.rows() != sigma.rows())
        throw std::invalid_argument("divergence arguments have different shapes");
}

void check_pair(const RegisterState& rho, const RegisterState& sigma) {
    if (!rho.shape().same_dims(sigma.shape())) throw std::invalid_argument("divergence arguments have different shapes");
}

// Weight of rho outside supp(sigma).
double leakage(const Mat& rho, const EigResult& es) {
    double leak = 0.0;
    for (Eigen::Index k = 0; k < es.values.size(); ++k)
        if (es.values(k) <= kSupportClip)
            leak += (es.vectors.col(k).adjoint() * rho * es.vectors.col(k))(0, 0).real();
    return leak;
}

double positive_part_trace(const RVec& v) {
    double t = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) t += std::max(0.0, v(k));
    return t;
}

}  // namespace

std::string to_string(DivergenceMethod m) {
    switch (m) {
        case DivergenceMethod::closed_form: return "closed_form";
        case DivergenceMethod::eigendecomposition: return "eigendecomposition";
        case DivergenceMethod::neyman_pearson: return "neyman_pearson";
        case DivergenceMethod::certificate: return "certificate";
    }
    return "unknown";
}

DivergenceResult relative_entropy(const Mat& rho, const Mat& sigma) {
    check_pair(rho, sigma);
    const Mat r = hermitize(rho), s = hermitize(sigma);
    const auto es = hermitian_eig(s);
    if (leakage(r, es) > kSupportClip) return DivergenceResult::infinity(DivergenceMethod::eigendecomposition);
    const auto er = hermitian_eig(r);
    double cross = 0.0;
    for (Eigen::Index k = 0; k < es.values.size(); ++k) {
        if (es.values(k) <= kSupportClip) continue;
        double w = (es.vectors.col(k).adjoint() * r * es.vectors.col(k))(0, 0).real();
        cross += w * std::log2(es.values(k));
    }
    double d = -xlog2x_sum(er.values) - cross;
    return DivergenceResult::finite(std::max(0.0, d), DivergenceMethod::eigendecomposition);
}

DivergenceResult relative_entropy(const RegisterState& rho, const RegisterState& sigma) {
    check_pair(rho, sigma);
    return relative_entropy(rho.rho(), sigma.rho());
}

DivergenceResult sandwiched_renyi(const Mat& rho, const Mat& sigma, double alpha) {
    check_pair(rho, sigma);
    if (!(alpha > 0) || alpha == 1.0) throw std::invalid_argument("sandwiched Renyi order must be in (0,1) or (1,inf)");
    const Mat r = hermitize(rho), s = hermitize(sigma);
    if (alpha > 1 && leakage(r, hermitian_eig(s)) > kSupportClip)
        return DivergenceResult::infinity(DivergenceMethod::eigendecomposition);
    const Mat p = pow_on_support(s, (1.0 - alpha) / (2.0 * alpha));
    const auto em = hermitian_eig(hermitize(p * r * p));
    double q = 0.0;
    for (Eigen::Index k = 0; k < em.values.size(); ++k)
        if (em.values(k) > kPsdClip) q += std::pow(em.values(k), alpha);
    if (q <= 0.0) return DivergenceResult::infinity(DivergenceMethod::eigendecomposition);
    return DivergenceResult::finite(std::log2(q) / (alpha - 1.0), DivergenceMethod::eigendecomposition);
}

DivergenceResult sandwiched_renyi(const RegisterState& rho, const RegisterState& sigma, double alpha) {
    check_pair(rho, sigma);
    return sandwiched_renyi(rho.rho(), sigma.rho(), alpha);
}

DivergenceResult max_relative_entropy(const Mat& rho, const Mat& sigma) {
    check_pair(rho, sigma);
    const Mat r = hermitize(rho), s = hermitize(sigma);
    if (leakage(r, hermitian_eig(s)) > kSupportClip) return DivergenceResult::infinity(DivergenceMethod::eigendecomposition);
    const Mat p = pow_on_support(s, -0.5);
    double top = hermitian_eig(hermitize(p * r * p)).values(0);
    return DivergenceResult::finite(std::max(0.0, std::log2(top)), DivergenceMethod::eigendecomposition);
}

DivergenceResult max_relative_entropy(const RegisterState& rho, const RegisterState& sigma) {
    check_pair(rho, sigma);
    return max_relative_entropy(rho.rho(), sigma.rho());
}

DivergenceResult min_relative_entropy(const Mat& rho, const Mat& sigma) {
    check_pair(rho, sigma);
    const double t = (support_projector(hermitize(rho)) * hermitize(sigma)).trace().real();
    if (t <= 0.0) return DivergenceResult::infinity(DivergenceMethod::eigendecomposition);
    return DivergenceResult::finite(std::max(0.0, -std::log2(std::min(1.0, t))), DivergenceMethod::eigendecomposition);
}

DivergenceResult min_relative_entropy(const RegisterState& rho, const RegisterState& sigma) {
    check_pair(rho, sigma);
    return min_relative_entropy(rho.rho(), sigma.rho());
}

NeymanPearsonTest neyman_pearson_test(const Mat& rho, const Mat& sigma, double epsilon) {
    check_pair(rho, sigma);
    if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in [0,1)");
    const Mat r = hermitize(rho), s = hermitize(sigma);
    const Eigen::Index d = r.rows();
    NeymanPearsonTest out;

    if (epsilon == 0.0) {
        out.lambda = support_projector(r);
        out.primalBeta = out.beta = (out.lambda * s).trace().real();
        out.typeOne = (out.lambda * r).trace().real();
        out.result = min_relative_entropy(r, s);
        return out;
    }

    // A test supported on ker(sigma) already meets the constraint.
    const Mat kernel = Mat::Identity(d, d) - support_projector(s);
    const double kernelWeight = (kernel * r).trace().real();
    if (kernelWeight >= 1.0 - epsilon - 1e-12) {
        out.lambda = kernel;
        out.typeOne = kernelWeight;
        out.result = DivergenceResult::infinity(DivergenceMethod::neyman_pearson);
        return out;
    }

    // Dual: maximise g(mu) = mu (1 - eps) - Tr(mu rho - sigma)_+ over mu >= 0.
    auto g = [&](double mu) { return mu * (1.0 - epsilon) - positive_part_trace(hermitian_eig(hermitize(mu * r - s)).values); };
    auto slope = [&](double mu) {
        auto e = hermitian_eig(hermitize(mu * r - s));
        double w = 0.0;
        for (Eigen::Index k = 0; k < d; ++k)
            if (e.values(k) > 0.0) w += (e.vectors.col(k).adjoint() * r * e.vectors.col(k))(0, 0).real();
        return (1.0 - epsilon) - w;
    };
    double lo = 0.0, hi = 1.0;
    while (slope(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e15) throw std::runtime_error("Neyman-Pearson threshold did not bracket");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (slope(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    out.beta = std::max(g(lo), g(hi));
    out.threshold = 0.5 * (lo + hi);

    // Primal test at the threshold: projector onto the positive part plus a fraction of the boundary.
    auto e = hermitian_eig(hermitize(out.threshold * r - s));
    const double zeroTol = 1e-9 * std::max(1.0, out.threshold);
    Mat pPlus = Mat::Zero(d, d), pZero = Mat::Zero(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
        Mat proj = e.vectors.col(k) * e.vectors.col(k).adjoint();
        if (e.values(k) > zeroTol) pPlus += proj;
        else if (e.values(k) >= -zeroTol) pZero += proj;
    }
    const double a = (pPlus * r).trace().real(), b = (pZero * r).trace().real();
    out.fraction = b > 0.0 ? std::clamp((1.0 - epsilon - a) / b, 0.0, 1.0) : 0.0;
    out.lambda = pPlus + out.fraction * pZero;
    out.primalBeta = (out.lambda * s).trace().real();
    out.typeOne = (out.lambda * r).trace().real();

    if (out.beta <= 0.0) out.result = DivergenceResult::infinity(DivergenceMethod::neyman_pearson);
    else out.result = DivergenceResult::finite(std::max(0.0, -std::log2(out.beta)), DivergenceMethod::neyman_pearson);
    return out;
}

DivergenceResult hypothesis_testing_divergence(const Mat& rho, const Mat& sigma, double epsilon) {
    return neyman_pearson_test(rho, sigma, epsilon).result;
}

DivergenceResult hypothesis_testing_divergence(const RegisterState& rho, const RegisterState& sigma, double epsilon) {
    check_pair(rho, sigma);
    return hypothesis_testing_divergence(rho.rho(), sigma.rho(), epsilon);
}

namespace {

void check_basis(const std::vector<Vec>& basis, int d) {
    if (static_cast<int>(basis.size()) != d) throw std::invalid_argument("measurement basis is incomplete");
    Mat sum = Mat::Zero(d, d);
    for (const auto& v : basis) {
        if (v.size() != d) throw std::invalid_argument("measurement vector has wrong dimension");
        sum += v * v.adjoint();
    }
    if ((sum - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("measurement basis is not orthonormal");
}

// (<v| (x) I) m (|v> (x) I) for v on the first factor.
Mat condition_first(const Mat& m, const Vec& v, Eigen::Index rest) {
    const Eigen::Index da = v.size();
    Mat out = Mat::Zero(rest, rest);
    for (Eigen::Index i = 0; i < da; ++i)
        for (Eigen::Index j = 0; j < da; ++j) {
            cplx c = std::conj(v(i)) * v(j);
            if (c != cplx(0.0)) out += c * m.block(i * rest, j * rest, rest, rest);
        }
    return out;
}

// Orthonormal completion of the columns of b.
std::vector<Vec> complete_basis(const Mat& b) {
    const Eigen::Index d = b.rows();
    std::vector<Vec> out;
    for (Eigen::Index c = 0; c < b.cols(); ++c) out.push_back(b.col(c));
    for (Eigen::Index k = 0; k < d && static_cast<Eigen::Index>(out.size()) < d; ++k) {
        Vec v = Vec::Zero(d);
        v(k) = 1.0;
        for (const auto& u : out) v -= u.dot(v) * u;
        if (v.norm() > 1e-8) out.push_back(v / v.norm());
    }
    return out;
}

double holevo_from_blocks(const std::vector<Mat>& blocks) {
    Mat avg = Mat::Zero(blocks[0].rows(), blocks[0].cols());
    double cond = 0.0;
    for (const auto& b : blocks) {
        avg += b;
        double p = b.trace().real();
        if (p > kPsdClip) cond += p * von_neumann_entropy(Mat(b / p));
    }
    return von_neumann_entropy(avg) - cond;
}

}  // namespace

double devetak_winter_rate(const RegisterState& rhoABE, const std::vector<Vec>& basisA) {
    const auto& dims = rhoABE.shape().dims;
    if (dims.size() != 3) throw std::invalid_argument("Devetak-Winter rate needs a state over (A, B, E)");
    check_basis(basisA, dims[0]);
    const Mat rho = rhoABE.rho();
    const Eigen::Index rest = static_cast<Eigen::Index>(dims[1]) * dims[2];
    std::vector<Mat> onB, onE;
    for (const auto& v : basisA) {
        Mat m = condition_first(rho, v, rest);
        onB.push_back(partial_trace_matrix(m, {dims[1], dims[2]}, {0}));
        onE.push_back(partial_trace_matrix(m, {dims[1], dims[2]}, {1}));
    }
    return holevo_from_blocks(onB) - holevo_from_blocks(onE);
}

double devetak_winter_rate(const GeneralizedPrivateState& g) {
    // The global state on (A_key, B_key, A', B', E) is pure, so after a rank-1 measurement of A_key
    // Eve's conditional entropy equals that of (B_key, A', B').
    const RegisterState gamma = g.expanded();
    const Mat rho = gamma.rho();
    const int dB = g.dim_key_b(), dsA = g.ds_a(), dsB = g.ds_b();
    const Eigen::Index rest = static_cast<Eigen::Index>(dB) * dsA * dsB;
    const auto basis = complete_basis(g.key.basisA);
    std::vector<Mat> onBob;
    double condEve = 0.0;
    for (const auto& v : basis) {
        Mat m = condition_first(rho, v, rest);
        double p = m.trace().real();
        onBob.push_back(partial_trace_matrix(m, {dB, dsA, dsB}, {0, 2}));
        if (p > kPsdClip) condEve += p * von_neumann_entropy(Mat(m / p));
    }
    const double eveInfo = von_neumann_entropy(rho) - condEve;
    return holevo_from_blocks(onBob) - eveInfo;
}

double kf_ensemble_value(const Ensemble& e, const RegisterState& target, double tol) {
    validate_ensemble(e, target, tol);
    double value = 0.0;
    for (const auto& [p, g] : e) {
        if (check_strict_irreducibility(g) == IrreducibilityVerdict::entangled_conditional)
            throw std::invalid_argument("ensemble member is not strictly irreducible");
        value += p * von_neumann_entropy(g.expanded(), std::vector<int>{0});
    }
    return value;
}

Mat dephased_max_entangled(int d) {
    Mat m = Mat::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i) m(i * d + i, i * d + i) = 1.0 / d;
    return m;
}

DualCertificate check_dual_certificate(int dk, const RegisterState& shield, double epsilon, double y, const Mat& Y) {
    if (dk < 1) throw std::invalid_argument("key dimension must be positive");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
    if (y < 0.0) throw std::invalid_argument("certificate y must be non-negative");
    const Mat phi = make_max_entangled(std::max(dk, 2)).rho();
    Mat keyPart = (dk == 1 ? Mat::Identity(1, 1) : phi) * y - dephased_max_entangled(dk);
    Mat op = kron(keyPart, shield.rho());
    if (Y.rows() != op.rows() || Y.cols() != op.cols()) throw std::invalid_argument("certificate Y has wrong dimension");
    DualCertificate c;
    c.y = y;
    c.Y = Y;
    c.value = y * (1.0 - epsilon) - Y.trace().real();
    c.maxViolation = hermitian_eig(hermitize(op - Y)).values(0);
    const double yMin = hermitian_eig(hermitize(Y)).values.minCoeff();
    c.feasible = c.maxViolation <= 1e-10 && yMin >= -1e-10;
    return c;
}

DualCertificate dual_certificate_value(int dk, const RegisterState& shield, double epsilon) {
    const Eigen::Index dim = static_cast<Eigen::Index>(dk) * dk * shield.dim();
    auto c = check_dual_certificate(dk, shield, epsilon, 1.0 / dk, Mat::Zero(dim, dim));
    return c;
}

BoundReport make_bound(std::string name, double lhs, double rhs, std::map<std::string, double> params, double tol) {
    BoundReport b;
    b.name = std::move(name);
    b.lhs = lhs;
    b.rhs = rhs;
    b.slack = rhs - lhs;
    b.satisfied = lhs <= rhs + tol;
    b.params = std::move(params);
    return b;
}

YieldCostReport yield_cost_bounds(int dk, double eps1, double eps2) {
    if (dk < 1) throw std::invalid_argument("key dimension must be positive");
    if (eps1 < 0.0 || eps2 < 0.0) throw std::invalid_argument("epsilons must be non-negative");
    if (eps1 + eps2 >= 1.0) throw std::invalid_argument("eps1 + eps2 must be below 1");
    YieldCostReport r;
    const double logd = std::log2(static_cast<double>(dk));
    r.correction = std::log2(1.0 / (1.0 - eps1 - eps2));
    r.kcUpper = logd;
    r.kcLower = logd + std::log2(1.0 - eps1);
    std::map<std::string, double> params{{"dk", static_cast<double>(dk)}, {"eps1", eps1}, {"eps2", eps2}};
    r.checks.push_back(make_bound("key_cost_bracket", r.kcLower, r.kcUpper, params));
    r.checks.push_back(make_bound("yield_cost", logd, r.kcLower + r.correction, params));
    return r;
}

}  // namespace privkey
