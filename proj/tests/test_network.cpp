#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "fixtures.hpp"
#include "wkb/network.hpp"
#include "wkb/periods.hpp"

using namespace wkb;

namespace {

HermitianInput n3_example() { return {{0.0, 0.25, 1.0}, fixtures::a3(), 0.5}; }

std::set<std::string> charges(const std::vector<FiniteWeb>& webs) {
    std::set<std::string> out;
    for (auto& w : webs) out.insert(w.charge);
    return out;
}

// a mirrored copy of every primary wall, with the label reversed
void check_mirror(const Network& net) {
    for (auto& w : net.walls) {
        if (!w.primary()) continue;
        bool found = false;
        for (auto& v : net.walls) {
            if (!v.primary() || v.a != w.b || v.b != w.a) continue;
            if (std::abs(std::conj(v.points.front()) - w.points.front()) > 1e-9) continue;
            size_t k = std::min(w.points.size(), v.points.size()) / 2;
            found = std::abs(std::conj(v.points[k]) - w.points[k]) < 1e-8 &&
                    std::abs(std::conj(v.points.back()) - w.points.back()) < 1e-6;
            if (found) break;
        }
        CHECK_MESSAGE(found, "wall " << w.id);
    }
}

using TermKey = std::tuple<int, int, std::vector<int>, double>;
std::multiset<TermKey> keys(const LiftedPathSum& s) {
    std::multiset<TermKey> out;
    for (auto& t : s.terms) out.insert({t.start, t.end, t.detours, t.coeff});
    return out;
}

}  // namespace

TEST_CASE("n=2 network at zero phase") {
    CurveModel m = build_curve(fixtures::n2());
    Network net = trace_network(m, 0.0);
    REQUIRE(net.walls.size() == 6);
    for (int b = 0; b < 2; ++b)
        CHECK(std::count_if(net.walls.begin(), net.walls.end(), [&](const Wall& w) { return w.origin_branch == b; }) == 3);

    int up = 0, down = 0;
    for (auto& w : net.walls) {
        CHECK(w.a != w.b);
        if (w.end != WallEnd::Infinity) {
            CHECK(w.end == WallEnd::BranchPoint);
            continue;
        }
        if (w.points.back().imag() > 0) {
            ++up;
            CHECK(w.a_end == 1);
            CHECK(w.b_end == 0);
        } else {
            ++down;
            CHECK(w.a_end == 0);
            CHECK(w.b_end == 1);
        }
    }
    CHECK(up == 1);
    CHECK(down == 1);

    auto webs = detect_finite_webs(m, net);
    REQUIRE(webs.size() == 2);
    CHECK(charges(webs) == std::set<std::string>{"h_12", "ht_12"});
    for (auto& w : webs) {
        CHECK(w.type == FiniteWeb::Type::Saddle);
        CHECK(w.Z.real() < 0);
        CHECK(std::abs(w.Z.imag()) < 1e-9);
        CHECK(web_phase_check(w, 0.0) < 1e-9);
        CHECK(std::abs(w.mass - w.Z) < 1e-5);
    }
    check_mirror(net);
}

TEST_CASE("walls follow leaves of constant phase") {
    CurveModel m = build_curve(fixtures::n2());
    for (double th : {0.0, 0.4}) {
        Network net = trace_network(m, th);
        cplx rot = std::polar(1.0, th);
        for (auto& w : net.walls) {
            double worst = 0.0;
            for (size_t k = 0; k + 1 < w.points.size(); ++k) {
                cplx dz = w.points[k + 1] - w.points[k];
                auto r = sheet_roots(m.input.u, m.input.A, w.points[k] + 0.5 * dz);
                auto near = [&](cplx v) {
                    return *std::min_element(r.begin(), r.end(), [&](cplx x, cplx y) { return std::abs(x - v) < std::abs(y - v); });
                };
                cplx mid = near(0.5 * (w.nu_a[k] + w.nu_a[k + 1])) - near(0.5 * (w.nu_b[k] + w.nu_b[k + 1]));
                cplx dmu = kI * (w.nu_a[k] - w.nu_b[k] + 4.0 * mid + w.nu_a[k + 1] - w.nu_b[k + 1]) / 6.0;
                cplx dw = std::conj(rot) * dmu * dz;
                worst = std::max(worst, std::abs(dw.imag()) / std::abs(dw));
                CHECK(dw.real() < 0);
            }
            CHECK(worst < 1e-5);
            CHECK(std::abs((std::conj(rot) * w.mass.back()).imag()) < 1e-9 * (1 + std::abs(w.mass.back())));
        }
    }
}

TEST_CASE("generic phases carry no webs and mirror to their negatives") {
    CurveModel m = build_curve(fixtures::n2());
    for (double th : {0.2, 0.7, -0.4}) CHECK(detect_finite_webs(m, trace_network(m, th)).empty());
    Network p = trace_network(m, 0.3), q = trace_network(m, -0.3);
    for (auto& w : p.walls) {
        bool found = false;
        for (auto& v : q.walls)
            if (v.a == w.b && v.b == w.a && std::abs(std::conj(v.points.back()) - w.points.back()) < 1e-6) found = true;
        CHECK(found);
    }
}

TEST_CASE("n=3 webs at zero phase") {
    CurveModel m = build_curve(n3_example());
    Network net = trace_network(m, 0.0);
    CHECK(net.branch_points.size() == 6);
    for (int b = 0; b < 6; ++b)
        CHECK(std::count_if(net.walls.begin(), net.walls.end(), [&](const Wall& w) { return w.origin_branch == b; }) == 3);
    auto webs = detect_finite_webs(m, net);
    std::set<std::string> saddles;
    const FiniteWeb* tree = nullptr;
    for (auto& w : webs) {
        REQUIRE(!w.charge.empty());
        CHECK(w.Z.real() < 0);
        CHECK(std::abs(w.Z.imag()) < 1e-9);
        CHECK(web_phase_check(w, 0.0) < 1e-9);
        if (w.type == FiniteWeb::Type::Saddle) saddles.insert(w.charge);
        if (w.type == FiniteWeb::Type::Tree) tree = &w;
    }
    for (auto c : {"h_12", "h_13", "h_23", "ht_12", "ht_23"}) CHECK(saddles.count(c) == 1);
    REQUIRE(tree);
    CHECK(tree->charge == "ht_13");
    CHECK(tree->strings == 5);
    // independent evaluation of the tree charge through the vanishing cycles
    cplx z = period(m, vanishing_cycle(m, 3, 2)) - period(m, vanishing_cycle(m, 2, 1));
    CHECK(std::abs(tree->mass - z) < 1e-5);
    CHECK(z.real() < 0);
    check_mirror(net);
}

TEST_CASE("n=3 topology slightly off the real phase") {
    CurveModel m = build_curve(n3_example());
    Network net = trace_network(m, 0.0005);
    std::set<std::pair<int, int>> at_infinity, generated;
    bool ring = false;
    for (auto& w : net.walls) {
        if (w.end == WallEnd::Infinity) at_infinity.insert({w.a_end, w.b_end});
        if (!w.primary() && w.end == WallEnd::Infinity) generated.insert({std::min(w.a_end, w.b_end), std::max(w.a_end, w.b_end)});
        if (w.primary() && w.end == WallEnd::Spiral) ring = true;
    }
    CHECK(at_infinity.size() == 6);
    CHECK(generated.count({0, 2}) == 1);
    CHECK(generated.count({1, 2}) == 1);
    CHECK(ring);
    CHECK(detect_finite_webs(m, net).empty());
}

TEST_CASE("refined phase lands on the web phase") {
    CurveModel m = build_curve(fixtures::n2());
    double th = refine_theta(m, 0.004, 0.01);
    CHECK(std::abs(th) < 2e-4);
}

TEST_CASE("degenerate curves are rejected") {
    CMat A = CMat::Zero(3, 3);
    A(0, 0) = 0;
    A(1, 1) = 1;
    A(2, 2) = 3;
    CurveModel m = build_curve({{0.0, 1.0, 5.0}, A, 0.5});
    CHECK_THROWS_AS(trace_network(m, 0.0), NumError);
}

TEST_CASE("path lifting") {
    CurveModel m = build_curve(fixtures::n2());
    Network net = trace_network(m, 0.0);

    PathSpec quiet;
    quiet.add(Segment::line(2.0, 3.0));
    auto direct = lift_path(m, net, quiet);
    CHECK(direct.crossings.empty());
    CHECK(keys(direct) == std::multiset<TermKey>{{0, 0, {}, 1.0}, {1, 1, {}, 1.0}});

    // lower half circle from +R to -R
    const double R = 3.0;
    PathSpec P;
    P.add(Segment::arc(0.0, R, 0.0, -kPi));
    auto lift = lift_path(m, net, P);
    REQUIRE(lift.crossings.size() == 1);
    const Wall& crossed = net.walls[lift.crossings[0]];
    CHECK(crossed.primary());
    CHECK(crossed.a_end == 0);
    CHECK(crossed.b_end == 1);
    CHECK(keys(lift) == std::multiset<TermKey>{{0, 0, {}, 1.0}, {1, 1, {}, 1.0}, {1, 0, {crossed.id}, 1.0}});

    // splitting the path and composing reproduces the single lift
    PathSpec P1, P2;
    P1.add(Segment::arc(0.0, R, 0.0, -0.3 * kPi));
    P2.add(Segment::arc(0.0, R, -0.3 * kPi, -kPi));
    CHECK(keys(compose(lift_path(m, net, P1), lift_path(m, net, P2))) == keys(lift));

    // two crossings: down through 1<2, back up through 2<1
    PathSpec full;
    full.add(Segment::arc(0.0, R, 0.0, -2.0 * kPi));
    auto two = lift_path(m, net, full);
    REQUIRE(two.crossings.size() == 2);
    PathSpec upper;
    upper.add(Segment::arc(0.0, R, -kPi, -2.0 * kPi));
    auto composed = compose(lift, lift_path(m, net, upper));
    CHECK(keys(composed) == keys(two));
    bool chained = false;
    for (auto& t : two.terms) chained |= t.detours.size() == 2 && t.start == 1 && t.end == 1;
    CHECK(chained);
}

TEST_CASE("lifting refuses generated walls") {
    CurveModel m = build_curve(n3_example());
    Network net = trace_network(m, 0.0005);
    PathSpec big;
    big.add(Segment::arc(0.0, 5.0, 0.0, -kPi));
    CHECK_THROWS_AS(lift_path(m, net, big), NumError);
}

TEST_CASE("network exports") {
    CurveModel m = build_curve(fixtures::n2());
    Network net = trace_network(m, 0.0);
    auto webs = detect_finite_webs(m, net);
    auto j = to_json(net, webs);
    CHECK(j["schema"] == "wkb.network/1");
    CHECK(j["walls"].size() == net.walls.size());
    CHECK(j["webs"].size() == 2);
    CHECK(j["walls"][0]["label"].size() == 2);
    CHECK(j["walls"][0]["origin"].contains("branch_point"));
    std::string svg = network_svg(net, webs);
    CHECK(svg.find("<svg") == 0);
    CHECK(std::count(svg.begin(), svg.end(), '\n') > 8);
}
