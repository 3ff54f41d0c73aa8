#include <doctest.h>

#include "curbflow/simulate.hpp"

using namespace curbflow;
using namespace curbflow::net;
using namespace curbflow::sim;

namespace {

StreetGraph single_node() {
    StreetGraph g;
    g.nodes = {"solo"};
    return g;
}

StreetGraph two_cycle() {
    StreetGraph g;
    g.nodes = {"a", "b"};
    g.edges = {{"a", "b", std::nullopt}, {"b", "a", std::nullopt}};
    return g;
}

std::vector<BlockFace> blocks_for(const StreetGraph& g, int k, double mu, double lambda) {
    std::vector<BlockFace> blocks;
    for (const auto& id : g.nodes) {
        BlockFace b;
        b.id = id;
        b.params = QueueParams(k, mu);
        b.lambda = lambda;
        blocks.push_back(b);
    }
    return blocks;
}

} // namespace

TEST_SUITE_BEGIN("simulate");

TEST_CASE("isolated stall matches the exact loss formula") {
    const auto g = single_node();
    const auto blocks = blocks_for(g, 1, 1.0, 1.0);
    SimConfig config;
    config.horizon_hours = 100000.0;
    config.warmup_hours = 1000.0;
    config.seed = 42;
    const auto result = run(g, blocks, config);
    const double exact = occupancy(QueueParams(1, 1.0), 1.0); // 0.5
    CHECK(result.blocks[0].occupancy_half_width > 0.0);
    CHECK(std::abs(result.blocks[0].occupancy - exact) <=
          3.0 * result.blocks[0].occupancy_half_width);
    CHECK(result.blocks[0].rejection_rate ==
          doctest::Approx(1.0 * erlang_blocking(QueueParams(1, 1.0), 1.0)).epsilon(0.05));
}

TEST_CASE("no demand, no events") {
    const auto g = two_cycle();
    const auto blocks = blocks_for(g, 1, 1.0, 0.0);
    SimConfig config;
    config.horizon_hours = 100.0;
    config.warmup_hours = 10.0;
    const auto result = run(g, blocks, config);
    CHECK(result.total_arrivals == 0);
    CHECK(result.blocks[0].occupancy == 0.0);
    CHECK(result.blocks[1].occupancy == 0.0);
    CHECK(result.blocks[0].rejection_rate == 0.0);
}

TEST_CASE("service-time insensitivity of the isolated loss queue") {
    const QueueParams params(3, 2.0);
    const double lambda = 10.0;
    const double exact = occupancy(params, lambda);
    const auto g = single_node();
    std::vector<BlockFace> blocks(1);
    blocks[0].id = "solo";
    blocks[0].params = params;
    blocks[0].lambda = lambda;

    for (auto kind : {ServiceKind::exponential, ServiceKind::deterministic,
                      ServiceKind::lognormal}) {
        SimConfig config;
        config.horizon_hours = 30000.0;
        config.warmup_hours = 500.0;
        config.seed = 7;
        config.service.kind = kind;
        config.service.cv = 1.0;
        const auto result = run(g, blocks, config);
        INFO("service kind ", static_cast<int>(kind));
        CHECK(std::abs(result.blocks[0].occupancy - exact) <=
              3.0 * result.blocks[0].occupancy_half_width);
    }
}

TEST_CASE("symmetric cycle approaches the analytic network solution") {
    const auto g = two_cycle();
    const auto blocks = blocks_for(g, 1, 1.0, 0.5);
    const auto analytic = net::forward_solve(g, blocks); // y = 1, u = 0.5 per block
    SimConfig config;
    config.horizon_hours = 50000.0;
    config.warmup_hours = 500.0;
    config.seed = 11;
    const auto result = run(g, blocks, config);
    for (int i = 0; i < 2; ++i) {
        const double rel = std::abs(result.blocks[i].occupancy - analytic.occupancy[i]) /
                           analytic.occupancy[i];
        CHECK(rel <= 0.05);
    }
}

TEST_CASE("identical seeds reproduce bit-identical results") {
    const auto g = two_cycle();
    const auto blocks = blocks_for(g, 2, 1.5, 1.6);
    SimConfig config;
    config.horizon_hours = 2000.0;
    config.warmup_hours = 100.0;
    config.seed = 1234;
    const auto a = run(g, blocks, config);
    const auto b = run(g, blocks, config);
    CHECK(a == b);

    config.seed = 1235;
    const auto c = run(g, blocks, config);
    CHECK(a != c);
}

TEST_CASE("every driver is accounted for") {
    const auto g = two_cycle();
    const auto blocks = blocks_for(g, 1, 1.0, 0.9);
    SimConfig config;
    config.horizon_hours = 5000.0;
    config.warmup_hours = 100.0;
    config.seed = 3;
    SUBCASE("unbounded hops") {
        const auto result = run(g, blocks, config);
        CHECK(result.total_parked + result.circulating_at_end + result.hop_capped +
                  result.exited_at_sink ==
              result.total_arrivals);
        CHECK(result.hop_capped == 0);
        CHECK(result.exited_at_sink == 0);
    }
    SUBCASE("hop cap reroutes drivers out") {
        config.max_hops = 3;
        const auto result = run(g, blocks, config);
        CHECK(result.total_parked + result.circulating_at_end + result.hop_capped +
                  result.exited_at_sink ==
              result.total_arrivals);
        CHECK(result.hop_capped > 0);
    }
    SUBCASE("sink exits") {
        StreetGraph g2;
        g2.nodes = {"a", "sink"};
        g2.edges = {{"a", "sink", std::nullopt}};
        const auto blocks2 = blocks_for(g2, 1, 1.0, 0.9);
        const auto result = run(g2, blocks2, config);
        CHECK(result.total_parked + result.circulating_at_end + result.hop_capped +
                  result.exited_at_sink ==
              result.total_arrivals);
        CHECK(result.exited_at_sink > 0);
    }
}

TEST_CASE("overload watchdog trips under saturation") {
    const auto g = two_cycle();
    const auto blocks = blocks_for(g, 1, 1.0, 40.0); // far beyond capacity
    SimConfig config;
    config.horizon_hours = 10000.0;
    config.warmup_hours = 10.0;
    config.seed = 5;
    config.overload_factor = 50.0;
    const auto result = run(g, blocks, config);
    CHECK(result.overloaded);
    CHECK(result.measured_hours < config.horizon_hours - config.warmup_hours);
}

TEST_CASE("replications shrink the confidence interval") {
    const auto g = single_node();
    const auto blocks = blocks_for(g, 1, 1.0, 1.0);
    SimConfig config;
    config.horizon_hours = 5000.0;
    config.warmup_hours = 100.0;
    config.seed = 21;

    const auto single = run(g, blocks, config);
    config.replications = 10;
    const auto many = replicate(g, blocks, config);
    CHECK(many.replications == 10);
    // CLT: ten independent runs cut the half-width roughly by sqrt(10).
    CHECK(many.blocks[0].occupancy_half_width < 0.8 * single.blocks[0].occupancy_half_width);
    CHECK(many.blocks[0].occupancy_half_width > 0.05 * single.blocks[0].occupancy_half_width);
    CHECK(std::abs(many.blocks[0].occupancy - 0.5) <= 3.0 * many.blocks[0].occupancy_half_width);
}

TEST_CASE("replicate with one replication equals run") {
    const auto g = single_node();
    const auto blocks = blocks_for(g, 2, 1.0, 1.5);
    SimConfig config;
    config.horizon_hours = 500.0;
    config.warmup_hours = 50.0;
    config.seed = 77;
    CHECK(replicate(g, blocks, config) == run(g, blocks, config));
}

TEST_CASE("replicate is deterministic across calls") {
    const auto g = two_cycle();
    const auto blocks = blocks_for(g, 1, 1.0, 0.5);
    SimConfig config;
    config.horizon_hours = 1000.0;
    config.warmup_hours = 100.0;
    config.seed = 9;
    config.replications = 4;
    CHECK(replicate(g, blocks, config) == replicate(g, blocks, config));
}

TEST_CASE("configuration validation") {
    SimConfig config;
    config.horizon_hours = 10.0;
    config.warmup_hours = 10.0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.warmup_hours = 1.0;
    config.edge_delay_hours = 0.0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
    config.edge_delay_hours = 0.01;
    config.replications = 0;
    CHECK_THROWS_AS(config.validate(), ValidationError);
}

TEST_SUITE_END();
