// Power and amplitude conventions shared by every module.
//
// Amplitudes are volts across a normalized 1-ohm load. A complex exponential
// of amplitude A carries P = A^2 / 2 watts, and dBm is referenced to 1 mW.

#ifndef IP3LAB_UNITS_HPP
#define IP3LAB_UNITS_HPP

#include <cmath>

namespace ip3lab {

/// Anything at or below this level is reported as exactly this value.
inline constexpr double kPowerFloorDbm = -200.0;

inline double watts_to_dbm(double watts) {
    if (!(watts > 0.0)) return kPowerFloorDbm;
    const double dbm = 10.0 * std::log10(watts / 1e-3);
    return dbm > kPowerFloorDbm ? dbm : kPowerFloorDbm;
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

/// Amplitude of a complex exponential carrying `dbm`.
inline double dbm_to_amplitude(double dbm) { return std::sqrt(2.0 * dbm_to_watts(dbm)); }

inline double amplitude_to_dbm(double amplitude) {
    return watts_to_dbm(0.5 * amplitude * amplitude);
}

inline double db_to_amplitude_ratio(double db) { return std::pow(10.0, db / 20.0); }

inline bool is_floor(double dbm) { return dbm <= kPowerFloorDbm; }

}  // namespace ip3lab

#endif  // IP3LAB_UNITS_HPP
