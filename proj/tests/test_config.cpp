#include <doctest.h>

#include "qact/config.hpp"

using namespace qact;

TEST_CASE("minimal config gets defaults") {
    auto cfg = parse_config(R"({"potential": {"terms": {"2": 0.5}}})");
    CHECK(cfg.seed == 1);
    CHECK(cfg.output == "out");
    CHECK(cfg.potential.dimension == 1);
    CHECK(cfg.potential.mass == 1.0);
    CHECK(cfg.potential.hbar == 1.0);
    CHECK(cfg.potential.terms.at({2, 0}) == 0.5);
    CHECK_FALSE(cfg.transition.has_value());
    auto grid = cfg.make_grid();
    CHECK(grid.dimension == 1);
    CHECK(grid.lo[0] == -10.0);
}

TEST_CASE("singular potential defaults to a half-line grid") {
    auto cfg = parse_config(R"({"potential": {"terms": {"-2": 5.0, "2": 0.5}}})");
    auto grid = cfg.make_grid();
    CHECK(grid.lo[0] > 0.0);
}

TEST_CASE("unknown keys are hard errors") {
    CHECK_THROWS_AS(parse_config(R"({"potential": {"terms": {"2": 1}}, "extra": 0})"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"potential": {"terms": {"2": 1}, "mas": 2}})"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"potential": {"terms": {"2": 1}}, "grid": {"lo": -5, "hi": 5, "npts": 100, "x": 1}})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"potential": {"terms": {"2": 1}}, "chaos": {"energies": [1], "horizons": 10}})"),
        ConfigError);
}

TEST_CASE("potential section is validated") {
    CHECK_THROWS_AS(parse_config(R"({"seed": 2})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"potential": {"terms": {}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"potential": {"terms": {"a": 1}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"potential": {"terms": {"-3": 1}}})"), ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"potential": {"dimension": 2, "terms": {"2": 1}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"potential": {"mass": -1, "terms": {"2": 1}}})"),
                    ConfigError);
}

TEST_CASE("2D terms use the px,py key form") {
    auto cfg = parse_config(
        R"({"potential": {"dimension": 2, "terms": {"2,0": 0.5, "0,2": 0.5, "2,2": 0.05}}})");
    CHECK(cfg.potential.terms.at({2, 2}) == 0.05);
    auto grid = cfg.make_grid();
    CHECK(grid.dimension == 2);
}

TEST_CASE("transition section is validated") {
    CHECK_THROWS_AS(
        parse_config(R"({"potential": {"terms": {"2": 1}}, "transition": {"T": []}})"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_config(R"({"potential": {"terms": {"2": 1}}, "transition": {"T": [-1]}})"),
        ConfigError);
    auto cfg = parse_config(
        R"({"potential": {"terms": {"2": 1}},
            "transition": {"T": [1, 2], "boundary": {"lo": -2, "hi": 2, "n": 8}}})");
    CHECK(cfg.transition->T.size() == 2);
    CHECK(cfg.transition->boundary.n == 8);
    CHECK(cfg.transition->states == 60);
}

TEST_CASE("fit ansatz forms") {
    auto cfg = parse_config(
        R"({"potential": {"terms": {"-2": 5, "2": 0.5}},
            "fit": {"ansatz": [-4, -2, 2, 4]}})");
    CHECK(cfg.fit->ansatz == std::vector<int>{-4, -2, 2, 4});
    CHECK_FALSE(cfg.fit->use_2d_full);

    auto cfg2 = parse_config(
        R"({"potential": {"dimension": 2, "terms": {"2,0": 0.5, "0,2": 0.5}},
            "fit": {"ansatz": "2d-full"}})");
    CHECK(cfg2.fit->use_2d_full);

    CHECK_THROWS_AS(
        parse_config(R"({"potential": {"terms": {"2": 1}}, "fit": {"ansatz": "2d-full"}})"),
        ConfigError);
}

TEST_CASE("echo round trips and is deterministic") {
    const std::string text =
        R"({"seed": 42, "output": "run1",
            "potential": {"dimension": 1, "mass": 1.5, "terms": {"-2": 1.0, "2": 0.5}},
            "transition": {"T": [0.5, 1], "states": 40},
            "fit": {"ansatz": [2], "initial_coeffs": [0.3]},
            "structure": {"ansatz": [-2, 0, 2]},
            "chaos": {"energies": [2, 4], "samples": 10}})";
    auto cfg = parse_config(text);
    const std::string echo1 = echo_config(cfg);
    CHECK(echo1 == echo_config(cfg));

    auto cfg2 = parse_config(echo1);
    CHECK(echo_config(cfg2) == echo1);
    CHECK(cfg2.seed == 42);
    CHECK(cfg2.potential.mass == 1.5);
    CHECK(cfg2.chaos->samples == 10);
}

TEST_CASE("non-JSON input is a config error") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/qact.json"), ConfigError);
}
