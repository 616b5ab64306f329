#include "omphase/mps.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace omphase {

namespace {

const Eigen::VectorXd kTrivialBond = Eigen::VectorXd::Ones(1);

// Largest-magnitude entry of each U column is rotated to the positive real
// axis (compensated in V) so that repeated SVDs of the same block reproduce
// the same gauge.
void fix_svd_phases(Eigen::MatrixXcd& u, Eigen::MatrixXcd& v) {
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index r = 0; r < u.rows(); ++r) {
            double m = std::norm(u(r, c));
            if (m > best) {
                best = m;
                imax = r;
            }
        }
        const cx val = u(imax, c);
        const double mag = std::abs(val);
        if (mag > 0.0) {
            const cx phase = std::conj(val) / mag;
            u.col(c) *= phase;
            v.col(c) *= phase;
        }
    }
}

}  // namespace

TwoSiteGate TwoSiteGate::identity(int d_left, int d_right) {
    TwoSiteGate g;
    g.d_left_in = g.d_left_out = d_left;
    g.d_right_in = g.d_right_out = d_right;
    g.matrix = Eigen::MatrixXcd::Identity(d_left * d_right, d_left * d_right);
    return g;
}

TwoSiteGate TwoSiteGate::swap(int d_left, int d_right) {
    TwoSiteGate g;
    g.d_left_in = d_left;
    g.d_right_in = d_right;
    g.d_left_out = d_right;
    g.d_right_out = d_left;
    g.matrix = Eigen::MatrixXcd::Zero(d_left * d_right, d_left * d_right);
    for (int i = 0; i < d_left; ++i)
        for (int j = 0; j < d_right; ++j)
            g.matrix(j * d_left + i, i * d_right + j) = 1.0;
    return g;
}

double TwoSiteGate::unitarity_defect() const {
    const Eigen::MatrixXcd err =
        matrix.adjoint() * matrix -
        Eigen::MatrixXcd::Identity(matrix.cols(), matrix.cols());
    return err.cwiseAbs().maxCoeff();
}

MpsState MpsState::product_state(std::vector<int> site_dims, const std::vector<int>& basis,
                                 int system_site) {
    if (site_dims.size() != basis.size() || site_dims.empty())
        throw std::invalid_argument("product_state: dims/basis size mismatch");
    MpsState s;
    s.site_dims_ = std::move(site_dims);
    s.system_site_ = system_site;
    s.gammas_.resize(s.site_dims_.size());
    for (size_t k = 0; k < s.site_dims_.size(); ++k) {
        const int d = s.site_dims_[k];
        if (basis[k] < 0 || basis[k] >= d)
            throw std::invalid_argument("product_state: basis index out of range");
        SiteTensor t(d, Eigen::MatrixXcd::Zero(1, 1));
        t[basis[k]](0, 0) = 1.0;
        s.gammas_[k] = std::move(t);
    }
    s.lambdas_.assign(s.site_dims_.size() - 1, kTrivialBond);
    return s;
}

MpsState MpsState::from_tensors(std::vector<SiteTensor> gammas,
                                std::vector<Eigen::VectorXd> lambdas, int system_site) {
    if (gammas.empty() || lambdas.size() + 1 != gammas.size())
        throw std::invalid_argument("from_tensors: inconsistent chain length");
    MpsState s;
    s.site_dims_.reserve(gammas.size());
    for (size_t k = 0; k < gammas.size(); ++k) {
        if (gammas[k].empty()) throw std::invalid_argument("from_tensors: empty site tensor");
        const Eigen::Index rows = gammas[k][0].rows();
        const Eigen::Index cols = gammas[k][0].cols();
        for (const auto& m : gammas[k])
            if (m.rows() != rows || m.cols() != cols)
                throw std::invalid_argument("from_tensors: ragged site tensor");
        const Eigen::Index want_left = (k == 0) ? 1 : lambdas[k - 1].size();
        const Eigen::Index want_right = (k + 1 == gammas.size()) ? 1 : lambdas[k].size();
        if (rows != want_left || cols != want_right)
            throw std::invalid_argument("from_tensors: bond dimension mismatch");
        s.site_dims_.push_back(static_cast<int>(gammas[k].size()));
    }
    if (system_site < 0 || system_site >= static_cast<int>(gammas.size()))
        throw std::invalid_argument("from_tensors: system site out of range");
    s.gammas_ = std::move(gammas);
    s.lambdas_ = std::move(lambdas);
    s.system_site_ = system_site;
    return s;
}

const Eigen::VectorXd& MpsState::lambda(int bond) const {
    if (bond < 0 || bond >= num_bonds()) throw std::out_of_range("lambda: bond out of range");
    return lambdas_[bond];
}

int MpsState::max_bond_dim() const {
    int m = 1;
    for (const auto& l : lambdas_) m = std::max(m, static_cast<int>(l.size()));
    return m;
}

double MpsState::entanglement_entropy(int bond) const {
    const Eigen::VectorXd& l = lambda(bond);
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
        const double p = l[i] * l[i];
        if (p > 0.0) s -= p * std::log2(p);
    }
    return s;
}

std::vector<double> MpsState::entropy_profile() const {
    std::vector<double> prof(num_bonds());
    for (int b = 0; b < num_bonds(); ++b) prof[b] = entanglement_entropy(b);
    return prof;
}

void MpsState::apply_two_site_gate(int left_site, const TwoSiteGate& gate,
                                   const TruncationPolicy& pol) {
    update_pair_(left_site, PairOp::Gate, &gate, pol);
}

void MpsState::swap_adjacent(int left_site, const TruncationPolicy& pol) {
    update_pair_(left_site, PairOp::Swap, nullptr, pol);
    if (system_site_ == left_site)
        system_site_ = left_site + 1;
    else if (system_site_ == left_site + 1)
        system_site_ = left_site;
}

void MpsState::recanonicalize() {
    const TruncationPolicy exact = TruncationPolicy::exact();
    for (int ls = 0; ls + 1 < num_sites(); ++ls) update_pair_(ls, PairOp::Resplit, nullptr, exact);
}

void MpsState::update_pair_(int left_site, PairOp op, const TwoSiteGate* gate,
                            const TruncationPolicy& pol) {
    const int L = num_sites();
    if (left_site < 0 || left_site + 1 >= L)
        throw std::out_of_range("update_pair: invalid site pair");
    const int dl = site_dims_[left_site];
    const int dr = site_dims_[left_site + 1];
    int dlo = dl, dro = dr;
    if (op == PairOp::Gate) {
        if (gate->d_left_in != dl || gate->d_right_in != dr)
            throw std::invalid_argument("apply_two_site_gate: gate dims do not match sites");
        if (gate->matrix.rows() != gate->d_left_out * gate->d_right_out ||
            gate->matrix.cols() != dl * dr)
            throw std::invalid_argument("apply_two_site_gate: bad gate matrix shape");
        dlo = gate->d_left_out;
        dro = gate->d_right_out;
    } else if (op == PairOp::Swap) {
        dlo = dr;
        dro = dl;
    }

    const Eigen::VectorXd& lamL = (left_site == 0) ? kTrivialBond : lambdas_[left_site - 1];
    const Eigen::VectorXd& lamM = lambdas_[left_site];
    const Eigen::VectorXd& lamR = (left_site + 2 == L) ? kTrivialBond : lambdas_[left_site + 1];
    const int chiL = static_cast<int>(lamL.size());
    const int chiM = static_cast<int>(lamM.size());
    const int chiR = static_cast<int>(lamR.size());

    // Theta rows are the combined physical index, columns the (alpha,beta)
    // bond pair in row-major order.
    Eigen::MatrixXcd theta(dl * dr, chiL * chiR);
    {
        Eigen::MatrixXcd p1(chiL, chiM), p2(chiM, chiR);
        for (int i = 0; i < dl; ++i) {
            p1.noalias() = lamL.asDiagonal() * gammas_[left_site][i] * lamM.asDiagonal();
            for (int j = 0; j < dr; ++j) {
                p2.noalias() = gammas_[left_site + 1][j] * lamR.asDiagonal();
                Eigen::MatrixXcd block = p1 * p2;  // chiL x chiR
                for (int a = 0; a < chiL; ++a)
                    theta.row(i * dr + j).segment(a * chiR, chiR) = block.row(a);
            }
        }
    }

    Eigen::MatrixXcd theta_out;
    switch (op) {
        case PairOp::Gate:
            theta_out.noalias() = gate->matrix * theta;
            break;
        case PairOp::Swap: {
            theta_out.resize(dr * dl, chiL * chiR);
            for (int i = 0; i < dl; ++i)
                for (int j = 0; j < dr; ++j) theta_out.row(j * dl + i) = theta.row(i * dr + j);
            break;
        }
        case PairOp::Resplit:
            theta_out = std::move(theta);
            break;
    }

    // Regroup to (chiL*dlo) x (dro*chiR) for the split.
    Eigen::MatrixXcd m(chiL * dlo, dro * chiR);
    for (int i = 0; i < dlo; ++i)
        for (int j = 0; j < dro; ++j)
            for (int a = 0; a < chiL; ++a)
                m.row(a * dlo + i).segment(j * chiR, chiR) =
                    theta_out.row(i * dro + j).segment(a * chiR, chiR);

    if (!m.allFinite())
        throw std::runtime_error("update_pair: non-finite values entering SVD");

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sig = svd.singularValues();
    const double total_weight = sig.squaredNorm();
    if (!(total_weight > 0.0))
        throw std::runtime_error("update_pair: zero-norm block");
    const double smax = sig[0];

    const double cut = std::max(pol.svd_threshold, pol.zero_floor) * smax;
    int keep = 0;
    while (keep < sig.size() && sig[keep] > cut) ++keep;
    keep = std::max(keep, 1);
    if (keep > pol.max_bond) {
        if (pol.strict_bond)
            throw bond_overflow_error("update_pair: bond dimension " + std::to_string(keep) +
                                      " exceeds max_bond " + std::to_string(pol.max_bond));
        keep = pol.max_bond;
    }

    const double kept_weight = sig.head(keep).squaredNorm();
    discarded_weight_ += (total_weight - kept_weight) / total_weight;

    Eigen::MatrixXcd u = svd.matrixU().leftCols(keep);
    Eigen::MatrixXcd v = svd.matrixV().leftCols(keep);
    fix_svd_phases(u, v);

    Eigen::VectorXd lam_new = sig.head(keep);
    if (pol.renormalize)
        lam_new /= std::sqrt(kept_weight);

    // Divide out the boundary lambdas; entries below the guard map to zero rows.
    const double guardL = 1e-12 * lamL.maxCoeff();
    const double guardR = 1e-12 * lamR.maxCoeff();
    SiteTensor g1(dlo, Eigen::MatrixXcd(chiL, keep));
    for (int i = 0; i < dlo; ++i)
        for (int a = 0; a < chiL; ++a) {
            if (lamL[a] > guardL)
                g1[i].row(a) = u.row(a * dlo + i) / lamL[a];
            else
                g1[i].row(a).setZero();
        }
    Eigen::MatrixXcd vh = v.adjoint();
    SiteTensor g2(dro, Eigen::MatrixXcd(keep, chiR));
    for (int j = 0; j < dro; ++j)
        for (int b = 0; b < chiR; ++b) {
            if (lamR[b] > guardR)
                g2[j].col(b) = vh.col(j * chiR + b) / lamR[b];
            else
                g2[j].col(b).setZero();
        }

    gammas_[left_site] = std::move(g1);
    gammas_[left_site + 1] = std::move(g2);
    lambdas_[left_site] = std::move(lam_new);
    site_dims_[left_site] = dlo;
    site_dims_[left_site + 1] = dro;
}

double MpsState::norm() const { return std::sqrt(std::abs(overlap(*this, *this))); }

Eigen::MatrixXcd MpsState::site_density_matrix(int site) const {
    if (site < 0 || site >= num_sites()) throw std::out_of_range("site_density_matrix");
    const Eigen::VectorXd& lamL = (site == 0) ? kTrivialBond : lambdas_[site - 1];
    const Eigen::VectorXd& lamR = (site + 1 == num_sites()) ? kTrivialBond : lambdas_[site];
    const int d = site_dims_[site];
    std::vector<Eigen::MatrixXcd> blocks(d);
    for (int i = 0; i < d; ++i)
        blocks[i] = lamL.asDiagonal() * gammas_[site][i] * lamR.asDiagonal();
    Eigen::MatrixXcd rho(d, d);
    for (int i = 0; i < d; ++i)
        for (int ip = 0; ip < d; ++ip)
            rho(i, ip) = (blocks[i].array() * blocks[ip].array().conjugate()).sum();
    return rho;
}

double MpsState::expectation(int site, const Eigen::MatrixXcd& op) const {
    const Eigen::MatrixXcd rho = site_density_matrix(site);
    if (op.rows() != rho.rows() || op.cols() != rho.cols())
        throw std::invalid_argument("expectation: operator dimension mismatch");
    return (rho * op).trace().real();
}

cx overlap(const MpsState& a, const MpsState& b) {
    if (a.site_dims() != b.site_dims() || a.system_site() != b.system_site())
        throw std::invalid_argument("overlap: layout mismatch");
    Eigen::MatrixXcd env = Eigen::MatrixXcd::Ones(1, 1);
    const int L = a.num_sites();
    for (int k = 0; k < L; ++k) {
        const int d = a.site_dim(k);
        const int chiAR = static_cast<int>(a.gamma(k)[0].cols());
        const int chiBR = static_cast<int>(b.gamma(k)[0].cols());
        Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(chiAR, chiBR);
        Eigen::MatrixXcd ta, tb;
        for (int i = 0; i < d; ++i) {
            if (k > 0) {
                ta.noalias() = a.lambda(k - 1).asDiagonal() * a.gamma(k)[i];
                tb.noalias() = b.lambda(k - 1).asDiagonal() * b.gamma(k)[i];
            } else {
                ta = a.gamma(k)[i];
                tb = b.gamma(k)[i];
            }
            next.noalias() += ta.adjoint() * env * tb;
        }
        env = std::move(next);
    }
    return env(0, 0);
}

double canonical_defect(const MpsState& state) {
    double worst = 0.0;
    const int L = state.num_sites();
    for (int b = 0; b < state.num_bonds(); ++b) {
        const Eigen::VectorXd& l = state.lambda(b);
        worst = std::max(worst, std::abs(l.squaredNorm() - 1.0));
    }
    // left-orthonormality of A = diag(lambda_left) * Gamma
    for (int k = 0; k < L; ++k) {
        const int chiR = (k + 1 == L) ? 1 : static_cast<int>(state.lambda(k).size());
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(chiR, chiR);
        for (int i = 0; i < state.site_dim(k); ++i) {
            Eigen::MatrixXcd A = state.gamma(k)[i];
            if (k > 0) A = state.lambda(k - 1).asDiagonal() * A;
            acc.noalias() += A.adjoint() * A;
        }
        const Eigen::MatrixXcd err = acc - Eigen::MatrixXcd::Identity(chiR, chiR);
        worst = std::max(worst, err.cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace omphase
