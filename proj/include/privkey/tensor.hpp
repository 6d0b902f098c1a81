#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace privkey {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Eigenvalues below this are treated as zero when building functions of PSD matrices.
inline constexpr double kPsdClip = 1e-12;
// Support projections for divergences.
inline constexpr double kSupportClip = 1e-10;
inline constexpr double kDefaultTol = 1e-10;

struct RegisterShape {
    std::vector<int> dims;
    std::vector<std::string> labels;

    RegisterShape() = default;
    explicit RegisterShape(std::vector<int> d, std::vector<std::string> l = {});

    int count() const { return static_cast<int>(dims.size()); }
    long long total() const;
    RegisterShape select(const std::vector<int>& idx) const;
    bool same_dims(const RegisterShape& o) const { return dims == o.dims; }
};

class RegisterState {
public:
    RegisterState() = default;

    static RegisterState pure(RegisterShape shape, Vec v, double tol = kDefaultTol);
    static RegisterState density(RegisterShape shape, Mat m, double tol = kDefaultTol);
    // Skips validation; used for intermediate objects built by trusted code.
    static RegisterState density_unchecked(RegisterShape shape, Mat m);

    bool is_pure() const { return pure_; }
    const RegisterShape& shape() const { return shape_; }
    long long dim() const { return shape_.total(); }
    double tolerance() const { return tol_; }

    const Vec& ket() const;
    Mat rho() const;

    RegisterState with_labels(std::vector<std::string> labels) const;

private:
    RegisterShape shape_;
    bool pure_ = false;
    Vec vec_;
    Mat mat_;
    double tol_ = kDefaultTol;
};

class UnitaryOperator {
public:
    UnitaryOperator() = default;
    UnitaryOperator(RegisterShape shape, Mat u, double tol = 1e-9);
    static UnitaryOperator identity(RegisterShape shape);

    const RegisterShape& shape() const { return shape_; }
    const Mat& matrix() const { return u_; }
    long long dim() const { return shape_.total(); }

private:
    RegisterShape shape_;
    Mat u_;
};

struct EigResult {
    RVec values;  // descending
    Mat vectors;  // orthonormal columns, same order
};

struct MeasureOutcome {
    int label = 0;
    double probability = 0.0;
    std::optional<RegisterState> post;  // absent when probability is zero
};

// Numerical helpers.
Mat hermitize(const Mat& m);
bool is_hermitian(const Mat& m, double tol);
bool is_unitary(const Mat& u, double tol);
Mat kron(const Mat& a, const Mat& b);
Vec kron(const Vec& a, const Vec& b);
double xlog2x_sum(const RVec& p, double clip = kPsdClip);

// Apply f to the spectrum of a Hermitian matrix.
template <class F>
Mat spectral_apply(const Mat& h, F f);

Mat sqrt_psd(const Mat& h);
// Hermitian power on the support (eigenvalues <= clip are mapped to zero).
Mat pow_on_support(const Mat& h, double p, double clip = kSupportClip);
Mat support_projector(const Mat& h, double clip = kSupportClip);
double trace_norm(const Mat& m);

// Index plumbing over row-major multipartite registers (first subsystem is most significant).
std::vector<long long> strides_of(const std::vector<int>& dims);
std::vector<int> digits_of(long long idx, const std::vector<int>& dims);
long long index_of(const std::vector<int>& digits, const std::vector<int>& dims);

// Core operations.
RegisterState kron(const RegisterState& a, const RegisterState& b);
UnitaryOperator kron(const UnitaryOperator& a, const UnitaryOperator& b);
// Output subsystem j is input subsystem perm[j].
RegisterState permute_subsystems(const RegisterState& s, const std::vector<int>& perm);
Mat permute_matrix(const Mat& m, const std::vector<int>& dims, const std::vector<int>& perm);
Vec permute_vector(const Vec& v, const std::vector<int>& dims, const std::vector<int>& perm);
RegisterState partial_trace(const RegisterState& s, const std::vector<int>& keep);
Mat partial_trace_matrix(const Mat& m, const std::vector<int>& dims, const std::vector<int>& keep);
RegisterState apply_unitary(const RegisterState& s, const UnitaryOperator& u,
                            const std::vector<int>& target);
Mat apply_left(const Mat& m, const Mat& u, const std::vector<int>& dims,
               const std::vector<int>& target);
EigResult hermitian_eig(const Mat& m);
double trace_distance(const RegisterState& a, const RegisterState& b);
double trace_distance(const Mat& a, const Mat& b);
double fidelity(const RegisterState& a, const RegisterState& b);
double fidelity(const Mat& a, const Mat& b);
double von_neumann_entropy(const RegisterState& s, const std::optional<std::vector<int>>& subsystems = std::nullopt);
double von_neumann_entropy(const Mat& rho);
RegisterState purify(const RegisterState& rho);
std::vector<MeasureOutcome> projective_measure(const RegisterState& s, const std::vector<Vec>& basis,
                                               const std::vector<int>& target);

template <class F>
Mat spectral_apply(const Mat& h, F f) {
    auto e = hermitian_eig(h);
    Mat out = Mat::Zero(h.rows(), h.cols());
    for (Eigen::Index k = 0; k < e.values.size(); ++k) {
        double fv = f(e.values(k));
        if (fv != 0.0) out.noalias() += fv * e.vectors.col(k) * e.vectors.col(k).adjoint();
    }
    return out;
}

}  // namespace privkey
