#include "privkey/states.hpp"

#include <cmath>
#include <stdexcept>

#include "privkey/rng.hpp"

namespace privkey {

namespace {

void check_orthonormal(const Mat& basis, int count, const char* what) {
    if (basis.cols() != count) throw std::invalid_argument(std::string(what) + ": basis count does not match coefficients");
    Mat g = basis.adjoint() * basis;
    if ((g - Mat::Identity(count, count)).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument(std::string(what) + ": basis is not orthonormal");
}

Mat identity_basis(int d) { return Mat::Identity(d, d); }

}  // namespace

SchmidtState::SchmidtState(std::vector<double> c, Mat a, Mat b)
    : coeffs(std::move(c)), basisA(std::move(a)), basisB(std::move(b)) {
    if (coeffs.empty()) throw std::invalid_argument("Schmidt state needs at least one coefficient");
    double total = 0;
    for (double x : coeffs) {
        if (!(x > 0)) throw std::invalid_argument("Schmidt coefficients must be positive");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("Schmidt coefficients must sum to 1");
    check_orthonormal(basisA, count(), "basisA");
    check_orthonormal(basisB, count(), "basisB");
}

SchmidtState SchmidtState::computational(std::vector<double> coeffs) {
    int k = static_cast<int>(coeffs.size());
    return SchmidtState(std::move(coeffs), identity_basis(k), identity_basis(k));
}

SchmidtState SchmidtState::maximally_entangled(int d) {
    return computational(std::vector<double>(d, 1.0 / d));
}

double SchmidtState::entropy() const {
    double h = 0;
    for (double x : coeffs) h -= x * std::log2(x);
    return h;
}

Vec SchmidtState::ket() const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(dim_a()) * dim_b());
    for (int i = 0; i < count(); ++i) v += std::sqrt(coeffs[i]) * kron(Vec(basisA.col(i)), Vec(basisB.col(i)));
    return v;
}

bool SchmidtState::is_computational() const {
    auto is_id = [&](const Mat& b) {
        return b.rows() == count() && (b - Mat::Identity(count(), count())).cwiseAbs().maxCoeff() < 1e-14;
    };
    return is_id(basisA) && is_id(basisB);
}

TwistingUnitary::TwistingUnitary(std::vector<Mat> b, double tol) : controlDim(static_cast<int>(b.size())), blocks(std::move(b)) {
    if (blocks.empty()) throw std::invalid_argument("twist needs at least one block");
    for (const auto& u : blocks) {
        if (u.rows() != blocks.front().rows()) throw std::invalid_argument("twist blocks differ in dimension");
        if (!is_unitary(u, tol)) throw std::invalid_argument("twist block is not unitary");
    }
}

TwistingUnitary TwistingUnitary::trivial(int dk, int shieldDim) {
    return TwistingUnitary(std::vector<Mat>(dk, Mat::Identity(shieldDim, shieldDim)));
}

RegisterShape GeneralizedPrivateState::shape() const {
    return RegisterShape({dim_key_a(), dim_key_b(), ds_a(), ds_b()}, {"A", "B", "A'", "B'"});
}

Mat GeneralizedPrivateState::conditional_block(int i) const {
    const Mat& u = twist.blocks.at(i);
    return u * shield.rho() * u.adjoint();
}

RegisterState GeneralizedPrivateState::expanded() const {
    const int k = dk();
    std::vector<Vec> keys(k);
    for (int i = 0; i < k; ++i) keys[i] = kron(Vec(key.basisA.col(i)), Vec(key.basisB.col(i)));
    const Mat rho = shield.rho();
    std::vector<Mat> urho(k);
    for (int i = 0; i < k; ++i) urho[i] = twist.blocks[i] * rho;
    const Eigen::Index dkey = keys[0].size(), ds = rho.rows();
    Mat out = Mat::Zero(dkey * ds, dkey * ds);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            Mat keyblock = std::sqrt(key.coeffs[i] * key.coeffs[j]) * keys[i] * keys[j].adjoint();
            out += kron(keyblock, Mat(urho[i] * twist.blocks[j].adjoint()));
        }
    return RegisterState::density_unchecked(shape(), hermitize(out));
}

std::string to_string(IrreducibilityVerdict v) {
    switch (v) {
        case IrreducibilityVerdict::separable_certified: return "separable_certified";
        case IrreducibilityVerdict::ppt_only: return "ppt_only";
        case IrreducibilityVerdict::entangled_conditional: return "entangled_conditional";
    }
    return "unknown";
}

bool Behavior::normalized(double tol) const {
    for (int x = 0; x < inX; ++x)
        for (int y = 0; y < inY; ++y) {
            double s = 0;
            for (int a = 0; a < outA; ++a)
                for (int b = 0; b < outB; ++b) {
                    if ((*this)(a, b, x, y) < -tol) return false;
                    s += (*this)(a, b, x, y);
                }
            if (std::abs(s - 1.0) > tol) return false;
        }
    return true;
}

bool Behavior::non_signaling(double tol) const {
    for (int x = 0; x < inX; ++x)
        for (int a = 0; a < outA; ++a) {
            double ref = -1;
            for (int y = 0; y < inY; ++y) {
                double m = 0;
                for (int b = 0; b < outB; ++b) m += (*this)(a, b, x, y);
                if (ref < 0) ref = m;
                else if (std::abs(m - ref) > tol) return false;
            }
        }
    for (int y = 0; y < inY; ++y)
        for (int b = 0; b < outB; ++b) {
            double ref = -1;
            for (int x = 0; x < inX; ++x) {
                double m = 0;
                for (int a = 0; a < outA; ++a) m += (*this)(a, b, x, y);
                if (ref < 0) ref = m;
                else if (std::abs(m - ref) > tol) return false;
            }
        }
    return true;
}

double Behavior::chsh() const {
    if (outA != 2 || outB != 2 || inX != 2 || inY != 2) throw std::invalid_argument("CHSH needs binary inputs and outputs");
    auto corr = [&](int x, int y) {
        double e = 0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) e += (a == b ? 1.0 : -1.0) * (*this)(a, b, x, y);
        return e;
    };
    return corr(0, 0) + corr(0, 1) + corr(1, 0) - corr(1, 1);
}

RegisterState make_max_entangled(int d) {
    if (d < 2) throw std::invalid_argument("maximally entangled state needs d >= 2");
    Vec v = Vec::Zero(static_cast<Eigen::Index>(d) * d);
    for (int i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
    return RegisterState::pure(RegisterShape({d, d}, {"A", "B"}), v);
}

GeneralizedPrivateState make_generalized_private_state(const SchmidtState& key, const RegisterState& shield,
                                                       const TwistingUnitary& twist, std::pair<int, int> split) {
    if (split.first < 1 || split.second < 1) throw std::invalid_argument("shield split must be positive");
    const long long ds = static_cast<long long>(split.first) * split.second;
    if (shield.dim() != ds) throw std::invalid_argument("shield dimension does not match shield split");
    if (twist.controlDim != key.count()) throw std::invalid_argument("twist control dimension does not match key");
    if (twist.shield_dim() != ds) throw std::invalid_argument("twist blocks do not match shield dimension");
    GeneralizedPrivateState g;
    g.key = key;
    RegisterShape sh({split.first, split.second}, {"A'", "B'"});
    g.shield = shield.is_pure() ? RegisterState::density_unchecked(sh, shield.rho())
                                : RegisterState::density(sh, shield.rho(), std::max(shield.tolerance(), 1e-10));
    g.twist = twist;
    g.shieldSplit = split;
    return g;
}

GeneralizedPrivateState make_private_state(int dk, const RegisterState& shield, const TwistingUnitary& twist,
                                           std::pair<int, int> split) {
    if (dk < 1) throw std::invalid_argument("key dimension must be positive");
    return make_generalized_private_state(SchmidtState::maximally_entangled(dk), shield, twist, split);
}

GeneralizedPrivateState make_flower_state(int ds, const Mat& u) {
    if (ds < 1 || u.rows() != ds || u.cols() != ds) throw std::invalid_argument("flower unitary must be ds x ds");
    if (!is_unitary(u, 1e-9)) throw std::invalid_argument("flower matrix is not unitary");
    const int d2 = ds * ds;
    Mat sigma = Mat::Zero(d2, d2);
    for (int i = 0; i < ds; ++i) sigma(i * ds + i, i * ds + i) = 1.0 / ds;
    // conj(u) on span{|ii>}, identity elsewhere
    Mat twist1 = Mat::Identity(d2, d2);
    for (int i = 0; i < ds; ++i)
        for (int j = 0; j < ds; ++j) twist1(i * ds + i, j * ds + j) = std::conj(u(i, j));
    RegisterState shield = RegisterState::density(RegisterShape({ds, ds}), sigma);
    return make_private_state(2, shield, TwistingUnitary({Mat::Identity(d2, d2), twist1}), {ds, ds});
}

Mat partial_transpose_b(const Mat& m, int dA, int dB) {
    if (m.rows() != static_cast<Eigen::Index>(dA) * dB) throw std::invalid_argument("partial transpose dims mismatch");
    Mat out(m.rows(), m.cols());
    for (int i = 0; i < dA; ++i)
        for (int j = 0; j < dB; ++j)
            for (int k = 0; k < dA; ++k)
                for (int l = 0; l < dB; ++l) out(i * dB + j, k * dB + l) = m(i * dB + l, k * dB + j);
    return out;
}

bool is_ppt(const Mat& m, int dA, int dB, double tol) {
    return hermitian_eig(partial_transpose_b(m, dA, dB)).values.minCoeff() >= -tol;
}

IrreducibilityVerdict check_strict_irreducibility(const GeneralizedPrivateState& g) {
    const int dA = g.ds_a(), dB = g.ds_b();
    if (dA < 1 || dB < 1) throw std::invalid_argument("shield split missing");
    const bool exactPpt = dA == 1 || dB == 1 || dA * dB <= 6;
    bool allCertified = true;
    for (int i = 0; i < g.dk(); ++i) {
        Mat b = g.conditional_block(i);
        if (!is_ppt(b, dA, dB)) return IrreducibilityVerdict::entangled_conditional;
        // states diagonal in the product basis are separable in any dimension
        Mat off = b;
        off.diagonal().setZero();
        bool diagonal = off.cwiseAbs().maxCoeff() <= 1e-12;
        if (!exactPpt && !diagonal) allCertified = false;
    }
    return allCertified ? IrreducibilityVerdict::separable_certified : IrreducibilityVerdict::ppt_only;
}

RegisterState sigma_ansatz(const GeneralizedPrivateState& g) {
    const int k = g.dk();
    Mat out;
    for (int i = 0; i < k; ++i) {
        Vec kv = kron(Vec(g.key.basisA.col(i)), Vec(g.key.basisB.col(i)));
        Mat term = kron(Mat(g.key.coeffs[i] * kv * kv.adjoint()), g.conditional_block(i));
        if (i == 0) out = term;
        else out += term;
    }
    return RegisterState::density_unchecked(g.shape(), hermitize(out));
}

std::vector<int> tensor_sir_permutation() { return {0, 4, 1, 5, 2, 6, 3, 7}; }

GeneralizedPrivateState tensor_sir(const GeneralizedPrivateState& g1, const GeneralizedPrivateState& g2) {
    const int k1 = g1.dk(), k2 = g2.dk();
    std::vector<double> coeffs;
    Mat bA(static_cast<Eigen::Index>(g1.dim_key_a()) * g2.dim_key_a(), k1 * k2);
    Mat bB(static_cast<Eigen::Index>(g1.dim_key_b()) * g2.dim_key_b(), k1 * k2);
    for (int i = 0; i < k1; ++i)
        for (int j = 0; j < k2; ++j) {
            coeffs.push_back(g1.key.coeffs[i] * g2.key.coeffs[j]);
            bA.col(i * k2 + j) = kron(Vec(g1.key.basisA.col(i)), Vec(g2.key.basisA.col(j)));
            bB.col(i * k2 + j) = kron(Vec(g1.key.basisB.col(i)), Vec(g2.key.basisB.col(j)));
        }
    // (A1', B1', A2', B2') -> (A1', A2', B1', B2')
    const std::vector<int> dims = {g1.ds_a(), g1.ds_b(), g2.ds_a(), g2.ds_b()};
    const std::vector<int> perm = {0, 2, 1, 3};
    Mat shield = permute_matrix(kron(g1.shield.rho(), g2.shield.rho()), dims, perm);
    std::vector<Mat> blocks;
    for (int i = 0; i < k1; ++i)
        for (int j = 0; j < k2; ++j) blocks.push_back(permute_matrix(kron(g1.twist.blocks[i], g2.twist.blocks[j]), dims, perm));
    std::pair<int, int> split{g1.ds_a() * g2.ds_a(), g1.ds_b() * g2.ds_b()};
    RegisterState sh = RegisterState::density_unchecked(RegisterShape({split.first, split.second}), shield);
    return make_generalized_private_state(SchmidtState(coeffs, bA, bB), sh, TwistingUnitary(blocks), split);
}

namespace {

void check_povm(const std::vector<Mat>& elems, long long d) {
    if (elems.empty()) throw std::invalid_argument("empty POVM");
    Mat sum = Mat::Zero(d, d);
    for (const auto& e : elems) {
        if (e.rows() != d || e.cols() != d) throw std::invalid_argument("POVM element has wrong dimension");
        if (!is_hermitian(e, 1e-10) || hermitian_eig(e).values.minCoeff() < -1e-10)
            throw std::invalid_argument("POVM element is not PSD");
        sum += e;
    }
    if ((sum - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10) throw std::invalid_argument("POVM does not sum to identity");
}

}  // namespace

Behavior behavior_from_realization(const RegisterState& rho, const std::vector<std::vector<Mat>>& measA,
                                   const std::vector<std::vector<Mat>>& measB) {
    if (rho.shape().count() != 2) throw std::invalid_argument("behavior needs a bipartite state");
    const int dA = rho.shape().dims[0], dB = rho.shape().dims[1];
    if (measA.empty() || measB.empty()) throw std::invalid_argument("behavior needs at least one setting per side");
    for (const auto& m : measA) check_povm(m, dA);
    for (const auto& m : measB) check_povm(m, dB);
    Behavior beh;
    beh.inX = static_cast<int>(measA.size());
    beh.inY = static_cast<int>(measB.size());
    beh.outA = static_cast<int>(measA[0].size());
    beh.outB = static_cast<int>(measB[0].size());
    for (const auto& m : measA)
        if (static_cast<int>(m.size()) != beh.outA) throw std::invalid_argument("settings differ in output count");
    for (const auto& m : measB)
        if (static_cast<int>(m.size()) != beh.outB) throw std::invalid_argument("settings differ in output count");
    beh.table.assign(static_cast<size_t>(beh.outA) * beh.outB * beh.inX * beh.inY, 0.0);
    const Mat r = rho.rho();
    for (int x = 0; x < beh.inX; ++x)
        for (int y = 0; y < beh.inY; ++y)
            for (int a = 0; a < beh.outA; ++a)
                for (int b = 0; b < beh.outB; ++b)
                    beh.at(a, b, x, y) = std::max(0.0, (r * kron(measA[x][a], measB[y][b])).trace().real());
    return beh;
}

RegisterState alice_bob_form(const GeneralizedPrivateState& g) {
    Mat m = permute_matrix(g.expanded().rho(), g.shape().dims, {0, 2, 1, 3});
    return RegisterState::density_unchecked(RegisterShape({g.dim_key_a() * g.ds_a(), g.dim_key_b() * g.ds_b()}), m);
}

long long ensemble_cap(const RegisterState& target) {
    if (target.shape().count() != 2) throw std::invalid_argument("ensemble target must be bipartite");
    long long ab = static_cast<long long>(target.shape().dims[0]) * target.shape().dims[1];
    return ab * ab + 1;
}

RegisterState ensemble_mixture(const Ensemble& e) {
    if (e.empty()) throw std::invalid_argument("empty ensemble");
    Mat mix;
    RegisterShape shape;
    for (size_t k = 0; k < e.size(); ++k) {
        auto ab = alice_bob_form(e[k].second);
        if (k == 0) {
            mix = e[k].first * ab.rho();
            shape = ab.shape();
        } else {
            if (!ab.shape().same_dims(shape)) throw std::invalid_argument("ensemble members have different local dimensions");
            mix += e[k].first * ab.rho();
        }
    }
    return RegisterState::density_unchecked(shape, mix);
}

void validate_ensemble(const Ensemble& e, const RegisterState& target, double tol) {
    if (static_cast<long long>(e.size()) > ensemble_cap(target))
        throw std::invalid_argument("ensemble has more members than (|A||B|)^2 + 1");
    double total = 0;
    for (const auto& [p, g] : e) {
        if (p < 0) throw std::invalid_argument("negative ensemble weight");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("ensemble weights must sum to 1");
    auto mix = ensemble_mixture(e);
    if (!mix.shape().same_dims(target.shape())) throw std::invalid_argument("ensemble does not match target dimensions");
    if ((mix.rho() - target.rho()).cwiseAbs().maxCoeff() > tol) throw std::invalid_argument("ensemble mixture does not reproduce target");
}

Ensemble product_ensemble(const Ensemble& e1, const Ensemble& e2) {
    Ensemble out;
    for (const auto& [p, g] : e1)
        for (const auto& [q, h] : e2) out.push_back({p * q, tensor_sir(g, h)});
    return out;
}

RegisterState product_target(const RegisterState& t1, const std::array<int, 4>& fine1, const RegisterState& t2,
                             const std::array<int, 4>& fine2) {
    auto check = [](const RegisterState& t, const std::array<int, 4>& f) {
        if (t.shape().count() != 2 || t.shape().dims[0] != f[0] * f[1] || t.shape().dims[1] != f[2] * f[3])
            throw std::invalid_argument("product target: fine dims do not match target");
    };
    check(t1, fine1);
    check(t2, fine2);
    std::vector<int> dims(fine1.begin(), fine1.end());
    dims.insert(dims.end(), fine2.begin(), fine2.end());
    Mat m = permute_matrix(kron(t1.rho(), t2.rho()), dims, tensor_sir_permutation());
    return RegisterState::density_unchecked(
        RegisterShape({fine1[0] * fine2[0] * fine1[1] * fine2[1], fine1[2] * fine2[2] * fine1[3] * fine2[3]}), m);
}

Mat random_unitary(int d, Rng& rng) {
    Mat z(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) z(i, j) = cplx(rng.normal(), rng.normal());
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ();
    Mat r = qr.matrixQR();
    for (int j = 0; j < d; ++j) {
        cplx ph = r(j, j) / std::abs(r(j, j));
        q.col(j) *= ph;
    }
    return q;
}

RegisterState random_density(int d, Rng& rng, int rank) {
    if (rank < 1) rank = d;
    Mat g(d, rank);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < rank; ++j) g(i, j) = cplx(rng.normal(), rng.normal());
    Mat r = g * g.adjoint();
    r /= r.trace().real();
    return RegisterState::density(RegisterShape({d}), hermitize(r));
}

std::vector<double> random_probs(int k, Rng& rng) {
    std::vector<double> p(k);
    double s = 0;
    for (auto& x : p) {
        x = 0.05 + rng.uniform();
        s += x;
    }
    for (auto& x : p) x /= s;
    // force an exact unit sum
    double t = 0;
    for (int i = 0; i + 1 < k; ++i) t += p[i];
    p[k - 1] = 1.0 - t;
    return p;
}

GeneralizedPrivateState random_gsir(int dk, int dsA, int dsB, Rng& rng) {
    Mat uA = random_unitary(dk, rng), uB = random_unitary(dk, rng);
    SchmidtState key(random_probs(dk, rng), uA, uB);
    const int terms = rng.integer(1, 3);
    auto w = random_probs(terms, rng);
    Mat shield = Mat::Zero(dsA * dsB, dsA * dsB);
    for (int t = 0; t < terms; ++t) {
        Vec a = random_unitary(dsA, rng).col(0), b = random_unitary(dsB, rng).col(0);
        Vec ab = kron(a, b);
        shield += w[t] * ab * ab.adjoint();
    }
    std::vector<Mat> blocks;
    for (int i = 0; i < dk; ++i) blocks.push_back(kron(random_unitary(dsA, rng), random_unitary(dsB, rng)));
    RegisterState sh = RegisterState::density(RegisterShape({dsA, dsB}), hermitize(shield), 1e-9);
    return make_generalized_private_state(key, sh, TwistingUnitary(blocks), {dsA, dsB});
}

}  // namespace privkey
