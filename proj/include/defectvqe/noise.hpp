#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvqe {

struct ReadoutError {
    double p01 = 0.0;  // P(read 1 | prepared 0)
    double p10 = 0.0;  // P(read 0 | prepared 1)
};

/// Gate-class depolarizing noise plus per-qubit readout confusion; optional
/// T1/T2 damping (off by default, since gate durations are a modeling choice
/// rather than calibration data).
struct NoiseModel {
    int n_qubits = 0;
    std::vector<double> p1;  // per-qubit depolarizing probability after 1q gates
    double p2 = 0.0;         // depolarizing probability after 2q gates
    std::vector<ReadoutError> readout;

    bool damping = false;
    std::vector<double> t1_us, t2_us;
    double gate_time_1q_us = 0.05;
    double gate_time_2q_us = 0.35;

    std::uint64_t seed = 0;

    static NoiseModel ideal(int n_qubits) {
        NoiseModel m;
        m.n_qubits = n_qubits;
        m.p1.assign(n_qubits, 0.0);
        m.readout.assign(n_qubits, {});
        return m;
    }

    static NoiseModel uniform_depolarizing(int n_qubits, double p1, double p2,
                                           double readout_flip = 0.0) {
        NoiseModel m = ideal(n_qubits);
        m.p1.assign(n_qubits, p1);
        m.p2 = p2;
        m.readout.assign(n_qubits, {readout_flip, readout_flip});
        return m;
    }

    bool is_ideal() const {
        if (p2 != 0.0 || damping) return false;
        for (double p : p1)
            if (p != 0.0) return false;
        for (const ReadoutError& r : readout)
            if (r.p01 != 0.0 || r.p10 != 0.0) return false;
        return true;
    }

    void validate() const {
        auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
        if (static_cast<int>(p1.size()) != n_qubits ||
            static_cast<int>(readout.size()) != n_qubits)
            throw std::invalid_argument("NoiseModel: per-qubit arrays must match n_qubits");
        if (!prob(p2)) throw std::invalid_argument("NoiseModel: p2 outside [0,1]");
        for (double p : p1)
            if (!prob(p)) throw std::invalid_argument("NoiseModel: p1 outside [0,1]");
        for (const ReadoutError& r : readout)
            if (!prob(r.p01) || !prob(r.p10))
                throw std::invalid_argument("NoiseModel: readout probability outside [0,1]");
        if (damping) {
            if (static_cast<int>(t1_us.size()) != n_qubits ||
                static_cast<int>(t2_us.size()) != n_qubits)
                throw std::invalid_argument("NoiseModel: damping needs per-qubit T1/T2");
            for (int q = 0; q < n_qubits; ++q) {
                if (t1_us[q] <= 0 || t2_us[q] <= 0)
                    throw std::invalid_argument("NoiseModel: T1/T2 must be positive");
                if (t2_us[q] > 2.0 * t1_us[q] + 1e-12)
                    throw std::invalid_argument("NoiseModel: T2 must not exceed 2*T1");
            }
        }
    }
};

/// Device calibration table: one row per physical qubit plus CNOT error rates
/// per coupled pair.
struct DeviceCalibration {
    struct QubitRow {
        double t1_us = 0, t2_us = 0, x_err = 0, readout_err = 0;
    };
    struct PairRow {
        int a = 0, b = 0;
        double cx_err = 0;
    };
    std::vector<QubitRow> qubits;
    std::vector<PairRow> pairs;

    /// Text format, `#` comments allowed:
    ///   qubit <index> <T1_us> <T2_us> <x_err> <readout_err>
    ///   pair <a> <b> <cx_err>
    static DeviceCalibration parse(std::istream& is) {
        DeviceCalibration cal;
        std::string line;
        int lineno = 0;
        while (std::getline(is, line)) {
            ++lineno;
            const auto start = line.find_first_not_of(" \t\r");
            if (start == std::string::npos || line[start] == '#') continue;
            std::istringstream ls(line);
            std::string tag;
            ls >> tag;
            if (tag == "qubit") {
                int index;
                QubitRow row;
                if (!(ls >> index >> row.t1_us >> row.t2_us >> row.x_err >> row.readout_err))
                    throw std::runtime_error("noise config line " + std::to_string(lineno) +
                                             ": expected `qubit i T1 T2 x_err readout_err`");
                if (index != static_cast<int>(cal.qubits.size()))
                    throw std::runtime_error("noise config line " + std::to_string(lineno) +
                                             ": qubit rows must be consecutive from 0");
                cal.qubits.push_back(row);
            } else if (tag == "pair") {
                PairRow row;
                if (!(ls >> row.a >> row.b >> row.cx_err))
                    throw std::runtime_error("noise config line " + std::to_string(lineno) +
                                             ": expected `pair a b cx_err`");
                cal.pairs.push_back(row);
            } else {
                throw std::runtime_error("noise config line " + std::to_string(lineno) +
                                         ": unknown row tag '" + tag + "'");
            }
        }
        if (cal.qubits.empty()) throw std::runtime_error("noise config: no qubit rows");
        return cal;
    }

    /// Builds a register noise model: device qubits map onto register qubits
    /// in listed order, p1 comes from the X error column, the readout
    /// confusion is symmetric with the readout column, and p2 is the mean CX
    /// error across the listed pairs.
    NoiseModel to_noise_model(int n_register) const {
        if (n_register > static_cast<int>(qubits.size()))
            throw std::invalid_argument("noise config: register larger than calibration table");
        NoiseModel m = NoiseModel::ideal(n_register);
        for (int q = 0; q < n_register; ++q) {
            m.p1[q] = qubits[q].x_err;
            m.readout[q] = {qubits[q].readout_err, qubits[q].readout_err};
            m.t1_us.push_back(qubits[q].t1_us);
            m.t2_us.push_back(qubits[q].t2_us);
        }
        if (!pairs.empty()) {
            double sum = 0;
            for (const PairRow& p : pairs) sum += p.cx_err;
            m.p2 = sum / static_cast<double>(pairs.size());
        }
        m.validate();
        return m;
    }
};

/// Calibration snapshot of the 7-qubit superconducting device used as the
/// default noisy preset ("casablanca").  Values also ship as
/// data/casablanca.noise in the same format.
inline DeviceCalibration casablanca_calibration() {
    DeviceCalibration cal;
    cal.qubits = {{51, 33, 4.0e-4, 4.3e-2},  {110, 105, 2.0e-4, 2.2e-2},
                  {114, 149, 3.5e-4, 2.9e-2}, {102, 201, 3.9e-4, 2.0e-2},
                  {107, 75, 2.4e-4, 3.1e-2},  {37, 72, 4.2e-4, 1.2e-2},
                  {107, 188, 6.4e-4, 2.4e-2}};
    cal.pairs = {{0, 1, 1.484e-2}, {1, 2, 0.957e-2}, {1, 3, 0.671e-2},
                 {3, 5, 1.168e-2}, {4, 5, 1.091e-2}, {5, 6, 0.948e-2}};
    return cal;
}

inline NoiseModel casablanca_noise(int n_register) {
    return casablanca_calibration().to_noise_model(n_register);
}

}  // namespace dvqe
