#pragma once

#include <stdexcept>
#include <string>

namespace mcmc::channel {

/// Physical scenario: a transparent spherical transmitter at distance r0 from
/// an absorbing spherical receiver, both diffusing, releasing molecules that
/// diffuse with D_X.
struct EnvParams {
    double D_Tx = 1e-14;  ///< transmitter diffusion coefficient [m^2/s]
    double D_Rx = 0.0;    ///< receiver diffusion coefficient [m^2/s]
    double D_X = 8e-11;   ///< signaling-molecule diffusion coefficient [m^2/s]
    double a_tx = 1e-7;   ///< transmitter radius [m]
    double a_rx = 1e-6;   ///< receiver radius [m]
    double r0 = 1e-5;     ///< initial centre-to-centre distance [m]

    /// Molecule relative to receiver.
    double D1() const { return D_X + D_Rx; }
    /// Transmitter relative to receiver.
    double D2() const { return D_Tx + D_Rx; }

    void validate() const {
        auto fail = [](const std::string& m) { throw std::invalid_argument("EnvParams: " + m); };
        if (!(D_Tx >= 0.0) || !(D_Rx >= 0.0)) fail("diffusion coefficients must be >= 0");
        if (!(D_X > 0.0)) fail("D_X must be > 0");
        if (!(a_rx > 0.0)) fail("a_rx must be > 0");
        if (!(a_tx > 0.0)) fail("a_tx must be > 0");
        if (!(r0 >= a_tx + a_rx)) fail("r0 must be >= a_tx + a_rx");
    }

    /// Reference drug-delivery scenario.
    static EnvParams table1() { return {}; }

    /// Link-design scenario: the reference scenario with a mobile receiver.
    static EnvParams link_scenario() {
        EnvParams e;
        e.D_Rx = 1e-11;
        return e;
    }
};

}  // namespace mcmc::channel
