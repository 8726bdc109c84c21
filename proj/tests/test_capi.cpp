#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "selfsim.h"

namespace {

selfsim_field* gaussian(int n, double L) {
    std::vector<double> re(n), im(n, 0.0);
    for (int j = 0; j < n; ++j) {
        const double x = -L + 2.0 * L * j / n;
        re[j] = std::exp(-x * x / 2.0);
    }
    selfsim_field* f = nullptr;
    REQUIRE(selfsim_field_create(n, L, 0, re.data(), im.data(), &f) == SELFSIM_OK);
    return f;
}

}  // namespace

TEST_CASE("parameters and error codes") {
    selfsim_params mp;
    REQUIRE(selfsim_derive_params(1, 7.0, 1.0, 0.3, &mp) == SELFSIM_OK);
    CHECK(mp.s_c == doctest::Approx(0.5 - 1.0 / 3.0));
    CHECK(std::string(selfsim_last_error()).empty());
    CHECK(selfsim_derive_params(1, 3.0, 1.0, 0.3, &mp) == SELFSIM_ERR_VALIDATION);
    CHECK_FALSE(std::string(selfsim_last_error()).empty());
    CHECK(selfsim_derive_params(1, 7.0, 1.0, 0.3, nullptr) == SELFSIM_ERR_VALIDATION);
    selfsim_field* f = nullptr;
    CHECK(selfsim_field_create(7, 10.0, 0, nullptr, nullptr, &f) == SELFSIM_ERR_VALIDATION);
    CHECK(f == nullptr);
}

TEST_CASE("field round trip, norms and propagation") {
    selfsim_field* f = gaussian(256, 16.0);
    CHECK(selfsim_field_size(f) == 256);
    CHECK(selfsim_field_half_width(f) == 16.0);
    double l2 = 0.0;
    REQUIRE(selfsim_norm(f, SELFSIM_NORM_LP, 2.0, 0.0, &l2) == SELFSIM_OK);
    CHECK(l2 == doctest::Approx(std::pow(M_PI, 0.25)).epsilon(1e-10));

    selfsim_field* g = nullptr;
    REQUIRE(selfsim_propagate(f, 0.0, 1.0, 2, &g) == SELFSIM_OK);
    std::vector<double> a(256), b(256);
    selfsim_field_values(f, a.data(), nullptr);
    selfsim_field_values(g, b.data(), nullptr);
    CHECK(a == b);
    selfsim_field_free(g);

    selfsim_field *p = nullptr, *o = nullptr;
    REQUIRE(selfsim_propagate(f, 0.5, 1.0, 4, &p) == SELFSIM_OK);
    REQUIRE(selfsim_propagate_oracle(f, 0.5, 1.0, &o) == SELFSIM_OK);
    double err = 1.0;
    selfsim_relative_l2_diff(p, o, &err);
    CHECK(err < 1e-8);
    selfsim_field_free(p);
    selfsim_field_free(o);

    selfsim_field* h = nullptr;
    REQUIRE(selfsim_field_copy(f, &h) == SELFSIM_OK);
    selfsim_field_axpy(h, -1.0, 0.0, f);
    double z = 1.0;
    selfsim_norm(h, SELFSIM_NORM_LP, 2.0, 0.0, &z);
    CHECK(z == 0.0);
    selfsim_field_free(h);
    selfsim_field_free(f);
}

TEST_CASE("kernel, admissibility and fits") {
    double k = 0.0;
    REQUIRE(selfsim_dispersive_norm(1.0, 1.0, 1, &k) == SELFSIM_OK);
    CHECK(k == doctest::Approx(std::pow(4.0 * M_PI * std::sinh(1.0), -0.5)));
    CHECK(selfsim_dispersive_norm(0.0, 1.0, 1, &k) == SELFSIM_ERR_VALIDATION);
    CHECK(selfsim_admissible(4.0, INFINITY, 1) == 1);
    CHECK(selfsim_admissible(2.0, INFINITY, 3) == 0);
    const double x[] = {0, 1, 2, 3}, y[] = {1, 3, 5, 7};
    selfsim_fit fit;
    REQUIRE(selfsim_linear_fit(x, y, 4, 0, 1, &fit) == SELFSIM_OK);
    CHECK(fit.slope == doctest::Approx(2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    CHECK(fit.n == 4);
}

TEST_CASE("resolvent inversion through the C layer") {
    selfsim_field* f = gaussian(512, 24.0);
    double r = 1.0;
    REQUIRE(selfsim_inversion_residual(f, 0.3, 0.2, 0, 1.0, &r) == SELFSIM_OK);
    CHECK(r < 1e-6);
    CHECK(selfsim_inversion_residual(f, 0.3, -5.0, 0, 1.0, &r) == SELFSIM_ERR_VALIDATION);
    selfsim_field_free(f);
}

TEST_CASE("flow defaults and a short zero run") {
    selfsim_flow_config c;
    selfsim_flow_config_default(&c);
    CHECK(c.sponge == 1);
    CHECK(c.sponge_inner == 0.7);
    c.dtau = 0.01;
    c.tau_end = 0.1;
    selfsim_params mp;
    REQUIRE(selfsim_derive_params(1, 7.0, 1.0, 0.3, &mp) == SELFSIM_OK);
    selfsim_field* v = nullptr;
    REQUIRE(selfsim_field_create(256, 32.0, 0, nullptr, nullptr, &v) == SELFSIM_OK);
    selfsim_series* s = nullptr;
    REQUIRE(selfsim_evolve(v, nullptr, &mp, &c, &s) == SELFSIM_OK);
    CHECK(selfsim_series_size(s) >= 2);
    CHECK(selfsim_series_aborted(s) == 0);
    double tau, e, h, l;
    REQUIRE(selfsim_series_row(s, 0, &tau, &e, &h, &l) == SELFSIM_OK);
    CHECK(tau == 0.0);
    CHECK(h == 0.0);
    CHECK(selfsim_series_row(s, 1000, &tau, &e, &h, &l) == SELFSIM_ERR_VALIDATION);
    const char* path = "capi_series.csv";
    CHECK(selfsim_series_write_csv(s, path) == SELFSIM_OK);
    std::remove(path);
    c.cadence = 0;
    selfsim_series* bad = nullptr;
    CHECK(selfsim_evolve(v, nullptr, &mp, &c, &bad) == SELFSIM_ERR_VALIDATION);
    selfsim_series_free(s);
    selfsim_field_free(v);
}
