#pragma once

// Vidal-form matrix product state engine: Gamma-lambda storage, two-site
// unitary updates with truncated SVD, swap gates, overlaps and Schmidt
// spectrum readout.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace omphase {

using cx = std::complex<double>;

// Thrown when strict bond enforcement is on and the singular values above
// threshold would exceed max_bond.
class bond_overflow_error : public std::runtime_error {
public:
    explicit bond_overflow_error(const std::string& what) : std::runtime_error(what) {}
};

struct TruncationPolicy {
    double svd_threshold = 1e-4;  // keep sigma with sigma/sigma_max > svd_threshold
    int max_bond = 64;
    bool renormalize = true;      // rescale kept lambdas to unit square-sum
    bool strict_bond = false;     // throw bond_overflow_error instead of capping
    double zero_floor = 1e-15;    // relative floor below which sigma is treated as zero

    static TruncationPolicy exact(int max_bond = 1 << 20) {
        return TruncationPolicy{0.0, max_bond, true, false, 1e-15};
    }
};

// Gate on an ordered pair of adjacent sites. Row/column index convention is
// i_left * d_right + i_right. Swap gates change the per-site dimensions, so
// output dims are carried separately.
struct TwoSiteGate {
    Eigen::MatrixXcd matrix;  // (d_left_out*d_right_out) x (d_left_in*d_right_in), square
    int d_left_in = 0;
    int d_right_in = 0;
    int d_left_out = 0;
    int d_right_out = 0;

    static TwoSiteGate identity(int d_left, int d_right);
    static TwoSiteGate swap(int d_left, int d_right);
    // max-norm of U^dag U - I
    double unitarity_defect() const;
};

// One site of the chain: rank-3 tensor stored as one chiL x chiR matrix per
// physical index.
using SiteTensor = std::vector<Eigen::MatrixXcd>;

class MpsState {
public:
    MpsState() = default;

    // Product state |basis[0]> x |basis[1]> x ... with the given local dims.
    static MpsState product_state(std::vector<int> site_dims, const std::vector<int>& basis,
                                  int system_site);

    int num_sites() const { return static_cast<int>(gammas_.size()); }
    int num_bonds() const { return num_sites() - 1; }
    const std::vector<int>& site_dims() const { return site_dims_; }
    int site_dim(int k) const { return site_dims_.at(k); }
    int system_site() const { return system_site_; }
    void set_system_site(int k) { system_site_ = k; }
    double discarded_weight() const { return discarded_weight_; }

    const SiteTensor& gamma(int site) const { return gammas_.at(site); }
    SiteTensor& gamma(int site) { return gammas_.at(site); }
    const Eigen::VectorXd& lambda(int bond) const;
    int bond_dim(int bond) const { return static_cast<int>(lambda(bond).size()); }
    int max_bond_dim() const;

    // lambda vector at an internal bond, as a copy
    Eigen::VectorXd schmidt_spectrum(int bond) const { return lambda(bond); }
    // bits; zero Schmidt values contribute nothing
    double entanglement_entropy(int bond) const;
    std::vector<double> entropy_profile() const;

    void apply_two_site_gate(int left_site, const TwoSiteGate& gate, const TruncationPolicy& pol);
    // Exchange the physical indices of sites (left_site, left_site+1); tracks
    // the system site. Implemented through the same SVD resplit as a gate.
    void swap_adjacent(int left_site, const TruncationPolicy& pol);

    // One left-to-right resplit pass with exact policy. Restores canonical
    // form for states that are close to canonical (e.g. after long truncated
    // evolutions); idempotent thanks to the fixed SVD phase convention.
    void recanonicalize();

    double norm() const;
    // reduced density matrix of one site (state assumed canonical)
    Eigen::MatrixXcd site_density_matrix(int site) const;
    double expectation(int site, const Eigen::MatrixXcd& op) const;

    void reset_discarded_weight() { discarded_weight_ = 0.0; }

    // raw construction for state preparation / checkpoint loading; validates shapes
    static MpsState from_tensors(std::vector<SiteTensor> gammas,
                                 std::vector<Eigen::VectorXd> lambdas, int system_site);

private:
    enum class PairOp { Gate, Swap, Resplit };
    void update_pair_(int left_site, PairOp op, const TwoSiteGate* gate,
                      const TruncationPolicy& pol);

    std::vector<SiteTensor> gammas_;
    std::vector<Eigen::VectorXd> lambdas_;  // one per internal bond
    std::vector<int> site_dims_;
    int system_site_ = 0;
    double discarded_weight_ = 0.0;
};

// <a|b> by left-to-right transfer-matrix contraction. Requires identical
// site_dims and system position.
cx overlap(const MpsState& a, const MpsState& b);

// Canonical-form diagnostics used by tests: returns the largest violation of
// lambda normalization, left-orthonormality and bond consistency.
double canonical_defect(const MpsState& state);

}  // namespace omphase
