#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "defectvqe/density.hpp"
#include "defectvqe/noise.hpp"
#include "oracles.hpp"

using namespace dvqe;
using Catch::Approx;

TEST_CASE("circuit bookkeeping") {
    Circuit c;
    c.n_qubits = 3;
    c.parameter_names = {"theta"};
    c.append(Gate::x(0));
    c.append(Gate::h(1));
    c.append(Gate::cnot(1, 2));
    c.append(Gate::rz_slot(2, 0, -0.5));
    CHECK_FALSE(c.is_bound());

    const double theta = 0.8;
    Circuit b = c.bind({&theta, 1});
    CHECK(b.is_bound());
    CHECK(b.gates[3].angle == Approx(-0.4));

    CHECK(c.depth() == 3);  // {x,h} | cnot | rz

    std::ostringstream os;
    c.netlist(os);
    CHECK(os.str() ==
          "x 0\n"
          "h 1\n"
          "cnot 1 2\n"
          "rz 2 theta*-0.5\n");

    CHECK_THROWS_AS(c.append(Gate::x(5)), std::invalid_argument);
    CHECK_THROWS_AS(c.append(Gate::cnot(1, 1)), std::invalid_argument);
}

TEST_CASE("X maps |0><0| to |1><1| and unbound gates are rejected") {
    DensityState s(1);
    s.apply(Gate::x(0));
    CHECK(std::abs(s.rho()(1, 1).real() - 1.0) < 1e-14);
    CHECK_THROWS_AS(s.apply(Gate::rz_slot(0, 0, 1.0)), std::invalid_argument);
}

TEST_CASE("full depolarization leaves the qubit maximally mixed") {
    NoiseModel noise = NoiseModel::uniform_depolarizing(1, 1.0, 0.0);
    DensityState s(1);
    s.apply(Gate::h(0), &noise);
    CHECK(std::abs(s.rho()(0, 0).real() - 0.5) < 1e-12);
    CHECK(std::abs(s.rho()(1, 1).real() - 0.5) < 1e-12);
    CHECK(std::abs(s.rho()(0, 1)) < 1e-12);
}

TEST_CASE("basic expectations") {
    PauliSum z(1);
    z.add("Z", 1.0);
    DensityState s(1);
    CHECK(s.expectation(z) == Approx(1.0).margin(1e-14));

    PauliSum x(1);
    x.add("X", 1.0);
    DensityState plus(1);
    plus.apply(Gate::h(0));
    CHECK(plus.expectation(x) == Approx(1.0).margin(1e-12));
}

TEST_CASE("channels preserve trace; noiseless evolution preserves purity") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> angle(-3.0, 3.0);
    NoiseModel noise = NoiseModel::uniform_depolarizing(3, 2e-3, 1e-2, 0.0);

    DensityState noisy(3);
    DensityState pure(3);
    for (int g = 0; g < 1000; ++g) {
        const int q = static_cast<int>(rng() % 3);
        Gate gate;
        switch (rng() % 5) {
        case 0: gate = Gate::x(q); break;
        case 1: gate = Gate::h(q); break;
        case 2: gate = Gate::rx(q, angle(rng)); break;
        case 3: gate = Gate::rz(q, angle(rng)); break;
        default: gate = Gate::cnot(q, static_cast<int>((q + 1) % 3)); break;
        }
        noisy.apply(gate, &noise);
        pure.apply(gate, nullptr);
        REQUIRE(noisy.trace() == Approx(1.0).margin(1e-9));
    }
    CHECK(pure.purity() == Approx(1.0).margin(1e-9));
    CHECK(noisy.purity() < 1.0);
}

TEST_CASE("readout flips show up at the configured rate") {
    NoiseModel noise = NoiseModel::ideal(1);
    noise.readout[0] = {0.1, 0.1};
    DensityState s(1);
    MeasurementGroup g;
    g.insert(PauliString::from_letters("Z"));
    std::mt19937_64 rng(42);
    ShotTable t = s.sample(g, 100000, &noise, rng);
    const double frac = static_cast<double>(t.counts["1"]) / t.shots;
    CHECK(frac == Approx(0.1).margin(0.005));
}

TEST_CASE("sampling a Bell-like state only sees its support") {
    Circuit c;
    c.n_qubits = 2;
    c.append(Gate::h(0));
    c.append(Gate::cnot(0, 1));
    DensityState s(2);
    s.run(c);
    MeasurementGroup g;
    g.insert(PauliString::from_letters("ZZ"));
    std::mt19937_64 rng(7);
    ShotTable t = s.sample(g, 8192, nullptr, rng);
    REQUIRE(t.counts.size() == 2);
    CHECK(t.counts.count("00") == 1);
    CHECK(t.counts.count("11") == 1);
    CHECK(static_cast<double>(t.counts["00"]) / t.shots == Approx(0.5).margin(0.02));
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    DensityState s(2);
    s.apply(Gate::h(0));
    s.apply(Gate::rx(1, 0.3));
    NoiseModel noise = NoiseModel::uniform_depolarizing(2, 1e-3, 0.0, 0.02);
    MeasurementGroup g;
    g.insert(PauliString::from_letters("ZZ"));
    std::mt19937_64 r1(99), r2(99);
    ShotTable a = s.sample(g, 4096, &noise, r1);
    ShotTable b = s.sample(g, 4096, &noise, r2);
    REQUIRE(a.counts == b.counts);
}

TEST_CASE("shot estimates converge to the exact expectation") {
    Circuit c;
    c.n_qubits = 2;
    c.append(Gate::rx(0, 0.7));
    c.append(Gate::h(1));
    c.append(Gate::cnot(0, 1));
    DensityState s(2);
    s.run(c);

    PauliSum obs(2);
    obs.add("ZZ", 1.0);
    const double exact = s.expectation(obs);

    MeasurementGroup g;
    g.insert(PauliString::from_letters("ZZ"));
    std::mt19937_64 rng(5);
    ShotTable t = s.sample(g, 8192, nullptr, rng);
    double mean = 0;
    for (const auto& [label, count] : t.counts) {
        double sign = 1;
        for (char ch : label)
            if (ch == '1') sign = -sign;
        mean += sign * count;
    }
    mean /= static_cast<double>(t.shots);
    const double sigma = std::sqrt((1.0 - exact * exact) / t.shots);
    CHECK(std::abs(mean - exact) <= 5.0 * sigma);
}

TEST_CASE("amplitude damping decays the excited population") {
    NoiseModel noise = NoiseModel::ideal(1);
    noise.damping = true;
    noise.t1_us = {50.0};
    noise.t2_us = {60.0};
    noise.gate_time_1q_us = 10.0;  // exaggerated for a visible effect
    noise.validate();

    DensityState s(1);
    s.apply(Gate::x(0), &noise);
    const double gamma = 1.0 - std::exp(-10.0 / 50.0);
    CHECK(s.rho()(1, 1).real() == Approx(1.0 - gamma).margin(1e-12));
    CHECK(s.trace() == Approx(1.0).margin(1e-12));
}

TEST_CASE("noise model validation") {
    NoiseModel bad = NoiseModel::ideal(2);
    bad.p2 = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    NoiseModel t2 = NoiseModel::ideal(1);
    t2.damping = true;
    t2.t1_us = {10.0};
    t2.t2_us = {25.0};  // beyond the 2*T1 bound
    CHECK_THROWS_AS(t2.validate(), std::invalid_argument);
}

TEST_CASE("device calibration preset") {
    NoiseModel m = casablanca_noise(4);
    CHECK(m.p1[0] == Approx(4.0e-4));
    CHECK(m.p1[3] == Approx(3.9e-4));
    CHECK(m.readout[1].p01 == Approx(2.2e-2));
    CHECK(m.p2 == Approx((1.484 + 0.957 + 0.671 + 1.168 + 1.091 + 0.948) * 1e-2 / 6.0));
    CHECK_FALSE(m.damping);
    CHECK_THROWS_AS(casablanca_noise(8), std::invalid_argument);

    // the shipped file parses to the embedded preset
    std::ifstream file(std::string(DVQE_SOURCE_DIR) + "/data/casablanca.noise");
    REQUIRE(file.good());
    DeviceCalibration cal = DeviceCalibration::parse(file);
    NoiseModel from_file = cal.to_noise_model(4);
    CHECK(from_file.p1 == m.p1);
    CHECK(from_file.p2 == Approx(m.p2));
    for (int q = 0; q < 4; ++q) {
        CHECK(from_file.readout[q].p01 == m.readout[q].p01);
        CHECK(from_file.t1_us[q] == m.t1_us[q]);
    }
}

TEST_CASE("statevector helper agrees with the density backend") {
    Circuit c;
    c.n_qubits = 3;
    c.append(Gate::h(0));
    c.append(Gate::cnot(0, 2));
    c.append(Gate::rx(1, 0.4));
    c.append(Gate::rz(2, -1.1));

    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(8);
    psi(0) = 1.0;
    psi = run_statevector(c, psi);

    DensityState s(3);
    s.run(c);
    Eigen::MatrixXcd expect = psi * psi.adjoint();
    CHECK((s.rho() - expect).cwiseAbs().maxCoeff() < 1e-12);
}
