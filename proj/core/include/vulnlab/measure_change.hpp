#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "vulnlab/random_time.hpp"
#include "vulnlab/tree.hpp"

namespace vulnlab {

// Control of the change of measure on the extended space.
//   phi_o  : F-adapted, acts on the compensated default martingale.
//   phi_pr : one value per atom, acts on the jump of A at theta. It must have zero
//            conditional mean given the market node at theta and theta itself, so in
//            discrete time it only reshapes the market law after default.
// The market component is not a free input: it is fixed by the density of Q on F.
struct PhiControl {
    AdaptedProcess phi_o;
    std::vector<double> phi_pr;
    std::optional<double> bound_n;

    static PhiControl zero(const ExtendedSpace& ext);
};

struct PhiValidation {
    bool valid = true;
    std::string message;
    std::size_t atom = std::numeric_limits<std::size_t>::max();
    NodeId node = std::numeric_limits<NodeId>::max();
};

PhiValidation validate_phi(const ExtendedSpace& ext, const PhiControl& phi);

struct DensityBundle {
    ExtProcess eta;
    AdaptedProcess eta_o_proj;  // E_P[eta_k | F_k]
    AdaptedProcess zf;          // density process of Q with respect to P on F
    AtomMeasure qphi;
    double martingale_residual = 0.0;
};

DensityBundle density_eta(const ExtendedSpace& ext, const PhiControl& phi);

struct HazardComparison {
    AdaptedProcess definitional;  // optional hazard recomputed under Q^phi
    AdaptedProcess formula;       // Lambda built from the P-hazard and phi_o
    double max_residual = 0.0;
    double compensator_residual = 0.0;  // |dA^{o,phi} - Gtilde^phi dLambda|
    double martingale_residual = 0.0;   // A - Lambda^theta under Q^phi
};

HazardComparison hazard_under_phi(const ExtendedSpace& ext, const PhiControl& phi);

struct SurvivalComparison {
    AdaptedProcess direct;
    AdaptedProcess formula;
    double max_residual = 0.0;
    // Largest |E_P[eta | F] - Z| and whether it vanishes on this instance.
    double pseudo_stopping_gap = 0.0;
    bool eta_projection_equals_market_density = false;
};

SurvivalComparison g_under_phi(const ExtendedSpace& ext, const PhiControl& phi);

// Reduced price computed from Q and Lambda alone:
// v_k = E_Q[(1 - dLambda_{k+1}) v_{k+1} + dLambda_{k+1} R_{k+1} | F_k], v = P where sigma stops.
AdaptedProcess reduced_price_under_phi(const ExtendedSpace& ext, const PhiControl& phi, const AdaptedProcess& P,
                                       const AdaptedProcess& R, const StoppingTime& sigma);

}  // namespace vulnlab
