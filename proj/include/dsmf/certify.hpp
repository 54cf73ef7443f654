#pragma once

#include "dsmf/decomp.hpp"
#include "dsmf/sysmodel.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dsmf {

enum class Verdict { detectable, theorem1_bounded, uncertified };

inline std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::detectable: return "DETECTABLE";
    case Verdict::theorem1_bounded: return "THEOREM1_BOUNDED";
    case Verdict::uncertified: return "UNCERTIFIED";
    }
    return "UNKNOWN";
}

/// PBH rank test at one eigenvalue of A with |lambda| >= 1.
struct PbhCheck {
    Complex lambda;
    Index rank = 0;
    bool passed = false;
};

struct DetectabilityResult {
    bool detectable = true;
    std::vector<PbhCheck> checks;
};

/// Detectable iff rank [A - lambda I; C] = n at every eigenvalue on or outside the unit circle.
inline DetectabilityResult check_collective_detectability(const Matrix& a, const Matrix& c, const Tolerances& tol = {})
{
    detail::require(a.rows() == a.cols(), ErrorCode::dim_mismatch, "A must be square");
    detail::require_dims(c.cols(), a.rows(), "joint measurement matrix columns");
    const Index n = a.rows();
    Matrix joint(n + c.rows(), n);
    joint << a, c;
    const double scale = shift_scale(joint);
    DetectabilityResult out;
    for (const auto& [lambda, count] : detail::cluster_eigenvalues(detail::eigenvalues_of(a), detail::kClusterRadius)) {
        if (std::abs(lambda) < 1.0 - tol.unit_circle) {
            continue;
        }
        ComplexMatrix stacked(n + c.rows(), n);
        stacked << detail::shifted(a, lambda), c.cast<Complex>();
        PbhCheck check{lambda, matrix_rank(stacked, tol.rank, scale), false};
        check.passed = check.rank == n;
        out.detectable = out.detectable && check.passed;
        out.checks.push_back(check);
    }
    return out;
}

/// Condition (ii) evidence at one unit-circle eigenvalue of Aobar.
struct UnitEigenCheck {
    Complex lambda;
    Index rank_lhs = 0;        // rank [Aobar - lambda I, Bobar, A21]
    Index rank_rhs = 0;        // rank (Aobar - lambda I)
    bool semisimple = false;
    double left_residual = 0.0;  // largest |q [Bobar, A21]| over left eigenvectors q
    bool rank_test = false;
    bool eigenvector_test = false;
};

struct Theorem1Result {
    bool condition_i = true;
    bool condition_ii = true;
    ObservabilityDecomposition decomposition;
    SpectralReport spectrum;
    std::vector<UnitEigenCheck> eigs;
};

/// Condition (i): Aobar marginally stable. Condition (ii): at every unit-circle eigenvalue,
/// [Bobar, A21] adds nothing to the column space of Aobar - lambda I. Checked both by ranks and
/// through an orthonormal basis of left eigenvectors; the two must agree.
inline Theorem1Result check_theorem1(const Matrix& a, const Matrix& b, const Matrix& c, const Tolerances& tol = {})
{
    Theorem1Result out;
    out.decomposition = observability_decomposition(a, b, c, tol.rank);
    const ObservabilityDecomposition& d = out.decomposition;
    out.spectrum = spectrum(d.Aobar, tol);
    out.condition_i = out.spectrum.marginally_stable(tol.unit_circle);
    const Index nb = d.n_obar();
    Matrix coupling(nb, d.Bobar.cols() + d.A21.cols());
    coupling << d.Bobar, d.A21;
    Matrix all(nb, nb + coupling.cols());
    all << d.Aobar, coupling;
    const double scale = shift_scale(all);
    for (const UnitEigenvalue& u : out.spectrum.unit_circle) {
        UnitEigenCheck e;
        e.lambda = u.lambda;
        e.semisimple = u.semisimple;
        const ComplexMatrix shifted = detail::shifted(d.Aobar, u.lambda);
        ComplexMatrix wide(nb, nb + coupling.cols());
        wide << shifted, coupling.cast<Complex>();
        e.rank_lhs = matrix_rank(wide, tol.rank, scale);
        e.rank_rhs = matrix_rank(shifted, tol.rank, scale);
        e.rank_test = e.rank_lhs == e.rank_rhs;

        // Left null space of the shift: trailing left singular vectors.
        const Eigen::JacobiSVD<ComplexMatrix> svd(shifted, Eigen::ComputeFullU);
        const Index defect = nb - e.rank_rhs;
        const ComplexMatrix q = svd.matrixU().rightCols(defect).adjoint();
        e.left_residual = defect == 0 || coupling.cols() == 0 ? 0.0 : (q * coupling.cast<Complex>()).cwiseAbs().maxCoeff();
        e.eigenvector_test = e.left_residual <= tol.rank * scale;
        if (e.rank_test != e.eigenvector_test) {
            throw Error(ErrorCode::ill_conditioned,
                        "rank and left-eigenvector forms disagree at lambda = " + std::to_string(u.lambda.real()) +
                            (u.lambda.imag() >= 0 ? "+" : "") + std::to_string(u.lambda.imag()) + "i (residual " +
                            std::to_string(e.left_residual) + ")");
        }
        out.condition_ii = out.condition_ii && e.rank_test;
        out.eigs.push_back(e);
    }
    return out;
}

struct ComponentCertificate {
    SourceComponent component;
    DetectabilityResult detectability;
    Theorem1Result theorem1;
    Verdict verdict = Verdict::uncertified;
};

enum class Coverage { source_member, covered_by_predecessor, unreachable };

inline std::string_view to_string(Coverage c)
{
    switch (c) {
    case Coverage::source_member: return "SOURCE_MEMBER";
    case Coverage::covered_by_predecessor: return "COVERED_BY_PREDECESSOR";
    case Coverage::unreachable: return "UNREACHABLE";
    }
    return "UNKNOWN";
}

struct CertificateReport {
    std::vector<ComponentCertificate> components;
    std::vector<Coverage> sensors;  // sensors[i - 1]
    Verdict network = Verdict::uncertified;
    Tolerances tolerances;
};

inline ComponentCertificate certify_component(const Scenario& s, const SourceComponent& c, const Tolerances& tol = {})
{
    ComponentCertificate out;
    out.component = c;
    const Matrix cj = joint_measurement_matrix(s, c);
    out.detectability = check_collective_detectability(s.plant.A, cj, tol);
    out.theorem1 = check_theorem1(s.plant.A, s.plant.B, cj, tol);
    if (out.detectability.detectable) {
        out.verdict = Verdict::detectable;
    } else if (out.theorem1.condition_i && out.theorem1.condition_ii) {
        out.verdict = Verdict::theorem1_bounded;
    }
    return out;
}

/// Certifies every source component and classifies the remaining sensors by
/// whether some source component reaches them.
inline CertificateReport certify_network(const Scenario& s, const Tolerances& tol = {})
{
    s.plant.validate();
    CertificateReport r;
    r.tolerances = tol;
    const auto comps = source_components(s.graph);
    bool all_detectable = true;
    bool all_bounded = true;
    std::vector<bool> member(static_cast<std::size_t>(s.num_sensors()) + 1, false);
    std::vector<bool> reached(static_cast<std::size_t>(s.num_sensors()) + 1, false);
    for (const SourceComponent& c : comps) {
        r.components.push_back(certify_component(s, c, tol));
        all_detectable = all_detectable && r.components.back().verdict == Verdict::detectable;
        all_bounded = all_bounded && r.components.back().verdict != Verdict::uncertified;
        for (int v : c.vertices) {
            member[static_cast<std::size_t>(v)] = true;
        }
    }
    for (int i = 1; i <= s.num_sensors(); ++i) {
        const std::vector<int> dist = distances_to(s.graph, i);
        for (int v = 1; v <= s.num_sensors(); ++v) {
            if (member[static_cast<std::size_t>(v)] && dist[static_cast<std::size_t>(v)] >= 0) {
                reached[static_cast<std::size_t>(i)] = true;
            }
        }
        r.sensors.push_back(member[static_cast<std::size_t>(i)] ? Coverage::source_member
                            : reached[static_cast<std::size_t>(i)] ? Coverage::covered_by_predecessor
                                                                   : Coverage::unreachable);
        all_bounded = all_bounded && reached[static_cast<std::size_t>(i)];
    }
    r.network = all_detectable && all_bounded ? Verdict::detectable
                : all_bounded                 ? Verdict::theorem1_bounded
                                              : Verdict::uncertified;
    return r;
}

} // namespace dsmf
