#pragma once

#include <cstdio>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dvqe {

enum class GateKind { X, H, Rx, Rz, Cnot };

inline const char* gate_name(GateKind k) {
    switch (k) {
    case GateKind::X: return "x";
    case GateKind::H: return "h";
    case GateKind::Rx: return "rx";
    case GateKind::Rz: return "rz";
    case GateKind::Cnot: return "cnot";
    }
    return "?";
}

/// One gate; parametric gates either carry a bound angle or reference a
/// parameter slot through angle = slot_scale * params[slot].
struct Gate {
    GateKind kind = GateKind::X;
    int q0 = 0;       // target (control for CNOT)
    int q1 = -1;      // CNOT target
    double angle = 0.0;
    int slot = -1;
    double slot_scale = 1.0;

    bool parametric() const { return kind == GateKind::Rx || kind == GateKind::Rz; }
    bool bound() const { return slot < 0; }

    static Gate x(int q) { return {GateKind::X, q}; }
    static Gate h(int q) { return {GateKind::H, q}; }
    static Gate rx(int q, double a) { return {GateKind::Rx, q, -1, a}; }
    static Gate rz(int q, double a) { return {GateKind::Rz, q, -1, a}; }
    static Gate rz_slot(int q, int slot, double scale) {
        return {GateKind::Rz, q, -1, 0.0, slot, scale};
    }
    static Gate cnot(int control, int target) { return {GateKind::Cnot, control, target}; }
};

struct Circuit {
    int n_qubits = 0;
    std::vector<Gate> gates;
    std::vector<std::string> parameter_names;

    void append(Gate g) {
        check(g);
        gates.push_back(g);
    }

    void append(const Circuit& other) {
        if (other.n_qubits != n_qubits) throw std::invalid_argument("Circuit append: size mismatch");
        for (const Gate& g : other.gates) append(g);
    }

    bool is_bound() const {
        for (const Gate& g : gates)
            if (!g.bound()) return false;
        return true;
    }

    /// Resolves every slot against params; the result has no free parameters.
    Circuit bind(std::span<const double> params) const {
        Circuit out;
        out.n_qubits = n_qubits;
        out.gates.reserve(gates.size());
        for (Gate g : gates) {
            if (g.slot >= 0) {
                if (g.slot >= static_cast<int>(params.size()))
                    throw std::invalid_argument("Circuit::bind: missing parameter");
                g.angle = g.slot_scale * params[g.slot];
                g.slot = -1;
            }
            out.gates.push_back(g);
        }
        return out;
    }

    /// Greedy ASAP layer count; gates on disjoint qubits share a layer.
    int depth() const {
        std::vector<int> busy(n_qubits, 0);
        int d = 0;
        for (const Gate& g : gates) {
            int at = busy[g.q0];
            if (g.q1 >= 0) at = std::max(at, busy[g.q1]);
            ++at;
            busy[g.q0] = at;
            if (g.q1 >= 0) busy[g.q1] = at;
            d = std::max(d, at);
        }
        return d;
    }

    /// Text netlist, one `gate qubits [angle-or-slot]` line per gate.
    void netlist(std::ostream& os) const {
        char buf[48];
        for (const Gate& g : gates) {
            os << gate_name(g.kind) << ' ' << g.q0;
            if (g.q1 >= 0) os << ' ' << g.q1;
            if (g.parametric()) {
                if (g.bound()) {
                    std::snprintf(buf, sizeof(buf), "%.17g", g.angle);
                    os << ' ' << buf;
                } else {
                    std::snprintf(buf, sizeof(buf), "%.17g", g.slot_scale);
                    const std::string name = g.slot < static_cast<int>(parameter_names.size())
                                                 ? parameter_names[g.slot]
                                                 : "p" + std::to_string(g.slot);
                    os << ' ' << name << '*' << buf;
                }
            }
            os << '\n';
        }
    }

private:
    void check(const Gate& g) const {
        auto ok = [&](int q) { return q >= 0 && q < n_qubits; };
        if (!ok(g.q0) || (g.kind == GateKind::Cnot && (!ok(g.q1) || g.q1 == g.q0)))
            throw std::invalid_argument("Circuit: gate qubits out of range or duplicated");
        if (g.kind == GateKind::Cnot && g.q1 < 0)
            throw std::invalid_argument("Circuit: CNOT needs two qubits");
    }
};

}  // namespace dvqe
