#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "curbflow/plot.hpp"
#include "curbflow/report.hpp"

using namespace curbflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("curbflow_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

const char* kMinimalScenario = R"({
  "name": "minimal",
  "blocks": [{"id": "solo", "k": 2, "mu": 1.0, "observed_u": 0.4}]
})";

std::string csv_scenario_json() {
    return R"({
  "name": "csv-based",
  "blocks": "blocks.csv",
  "edges": "edges.csv",
  "elasticity": {"elasticity": -0.21, "reference": "observed"},
  "price_bounds": {"min": 0.25, "max": 6.0}
})";
}

std::string blocks_csv() {
    return "id,k,mu,lambda,observed_u,price,through_traffic,cap\n"
           "a,2,1,,0.5,2.0,60,\n"
           "b,3,1.5,,0.6,1.5,,0.8\n";
}

std::string edges_csv() {
    return "from,to,weight\n"
           "a,b,\n"
           "b,a,\n";
}

} // namespace

TEST_SUITE_BEGIN("cli_io");

TEST_CASE("minimal inline scenario fills defaults") {
    TempDir dir;
    write_file(dir.path / "scenario.json", kMinimalScenario);
    const auto s = io::load_scenario(dir.path / "scenario.json");
    CHECK(s.name == "minimal");
    CHECK(s.units == "per-hour");
    CHECK(s.blocks.size() == 1);
    CHECK(s.blocks[0].params.k == 2);
    CHECK(s.blocks[0].observed_u == 0.4);
    CHECK_FALSE(s.blocks[0].lambda.has_value());
    CHECK_FALSE(s.blocks[0].price.has_value());
    CHECK(s.weights == pricing::ObjectiveWeights::stalls);
    // single node with no edges is a sink: flagged as a warning, not an error
    CHECK(s.warnings.size() == 1);
}

TEST_CASE("csv scenario round trips through the canonical echo") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv", blocks_csv());
    write_file(dir.path / "edges.csv", edges_csv());
    const auto s = io::load_scenario(dir.path / "scenario.json");
    CHECK(s.blocks.size() == 2);
    CHECK(s.blocks[1].congestion_cap == 0.8);
    CHECK_FALSE(s.blocks[0].congestion_cap.has_value());

    const auto echo = s.canonical();
    write_file(dir.path / "echo.json", echo.dump(2));
    const auto reloaded = io::load_scenario(dir.path / "echo.json");
    CHECK(reloaded.content_hash() == s.content_hash());
    CHECK(reloaded.canonical() == echo);
}

TEST_CASE("negative stall count is a named-field error") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv",
               "id,k,mu,lambda,observed_u,price,through_traffic,cap\n"
               "a,-2,1,,0.5,,,\n");
    write_file(dir.path / "edges.csv", "from,to,weight\n");
    CHECK_THROWS_WITH_AS(io::load_scenario(dir.path / "scenario.json"),
                         doctest::Contains("'k'"), ValidationError);
}

TEST_CASE("edge referencing an unknown block fails at load") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv", blocks_csv());
    write_file(dir.path / "edges.csv", "from,to,weight\na,ghost,\n");
    CHECK_THROWS_WITH_AS(io::load_scenario(dir.path / "scenario.json"),
                         doctest::Contains("unknown block id"), ValidationError);
}

TEST_CASE("malformed JSON reports the parse position") {
    TempDir dir;
    write_file(dir.path / "scenario.json", "{\"name\": \"broken\",");
    CHECK_THROWS_AS(io::load_scenario(dir.path / "scenario.json"), ValidationError);
}

TEST_CASE("wrong csv header is rejected") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv", "id,k,mu\na,2,1\n");
    write_file(dir.path / "edges.csv", edges_csv());
    CHECK_THROWS_WITH_AS(io::load_scenario(dir.path / "scenario.json"),
                         doctest::Contains("expected header"), ValidationError);
}

TEST_CASE("demand calibration from the observed reference") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv", blocks_csv());
    write_file(dir.path / "edges.csv", edges_csv());
    const auto s = io::load_scenario(dir.path / "scenario.json");
    const auto demand = io::calibrate_demand(s);
    REQUIRE(demand.size() == 2);
    REQUIRE(demand[0].model.has_value());
    // alpha = |elasticity| * u0 / p0 = 0.21 * 0.5 / 2.0
    CHECK(demand[0].model->alpha == doctest::Approx(0.21 * 0.5 / 2.0).epsilon(1e-12));
    CHECK(demand[0].source == "elasticity-reference");
    CHECK(demand[0].model->p_min == 0.25);
    // p_max tightened to 1/alpha when below the global bound
    CHECK(demand[0].model->p_max == doctest::Approx(6.0).epsilon(1e-12));
    REQUIRE(demand[1].model.has_value());
    CHECK(demand[1].model->alpha == doctest::Approx(0.21 * 0.6 / 1.5).epsilon(1e-12));
}

TEST_CASE("blocks without a reference point are excluded with a warning") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv",
               "id,k,mu,lambda,observed_u,price,through_traffic,cap\n"
               "a,2,1,,0.5,2.0,,\n"
               "nopition,3,1.5,,0.6,,,\n"); // no price => no (p0, u0)
    write_file(dir.path / "edges.csv",
               "from,to,weight\na,nopition,\nnopition,a,\n");
    const auto s = io::load_scenario(dir.path / "scenario.json");
    std::vector<std::string> warnings;
    const auto demand = io::calibrate_demand(s, &warnings);
    CHECK(demand[0].model.has_value());
    CHECK_FALSE(demand[1].model.has_value());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("nopition") != std::string::npos);

    const auto problem = io::build_pricing_problem(s);
    CHECK(problem.blocks.size() == 1);
    CHECK(problem.blocks[0].block.id == "a");
}

TEST_CASE("zero elasticity slope excludes the block with a warning") {
    TempDir dir;
    write_file(dir.path / "scenario.json", R"({
      "blocks": [
        {"id": "rigid", "k": 1, "mu": 1.0, "alpha": 0.0},
        {"id": "ok", "k": 1, "mu": 1.0, "alpha": 0.5}
      ]
    })");
    const auto s = io::load_scenario(dir.path / "scenario.json");
    std::vector<std::string> warnings;
    const auto demand = io::calibrate_demand(s, &warnings);
    CHECK_FALSE(demand[0].model.has_value());
    CHECK(demand[0].source.find("zero or negative") != std::string::npos);
    CHECK(demand[1].model.has_value());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("rigid") != std::string::npos);
}

TEST_CASE("direct global alpha wins over elasticity conversion") {
    TempDir dir;
    write_file(dir.path / "scenario.json", R"({
      "blocks": [{"id": "x", "k": 1, "mu": 1.0, "observed_u": 0.5}],
      "elasticity": {"alpha": 0.4},
      "price_bounds": {"min": 0.0, "max": 2.5}
    })");
    const auto s = io::load_scenario(dir.path / "scenario.json");
    const auto demand = io::calibrate_demand(s);
    REQUIRE(demand[0].model.has_value());
    CHECK(demand[0].model->alpha == 0.4);
    CHECK(demand[0].source == "global-alpha");
}

TEST_CASE("per-block alpha wins over everything") {
    TempDir dir;
    write_file(dir.path / "scenario.json", R"({
      "blocks": [{"id": "x", "k": 1, "mu": 1.0, "alpha": 0.9}],
      "elasticity": {"alpha": 0.4}
    })");
    const auto s = io::load_scenario(dir.path / "scenario.json");
    const auto demand = io::calibrate_demand(s);
    REQUIRE(demand[0].model.has_value());
    CHECK(demand[0].model->alpha == 0.9);
    CHECK(demand[0].source == "block");
    // no global max: ceiling is 1/alpha
    CHECK(demand[0].model->p_max == doctest::Approx(1.0 / 0.9).epsilon(1e-12));
}

TEST_CASE("report serialization is deterministic and self-describing") {
    TempDir dir;
    write_file(dir.path / "scenario.json", csv_scenario_json());
    write_file(dir.path / "blocks.csv", blocks_csv());
    write_file(dir.path / "edges.csv", edges_csv());
    io::Report report;
    report.scenario = io::load_scenario(dir.path / "scenario.json");
    report.warnings = report.scenario.warnings;
    report.flows = net::estimate_from_occupancy(report.scenario.graph, report.scenario.blocks);
    report.cruising["a"] =
        net::cruising_share(*report.flows, report.scenario.graph, report.scenario.blocks, "a");
    report.demand = io::calibrate_demand(report.scenario);
    report.pricing = pricing::optimize_prices(io::build_pricing_problem(report.scenario));

    const auto j1 = report.to_json();
    const auto j2 = report.to_json();
    CHECK(j1.dump() == j2.dump());
    CHECK(j1.at("scenario_hash") == "fnv1a64:" + report.scenario.content_hash());
    CHECK(j1.at("flows").at("blocks").contains("a"));
    CHECK(j1.at("pricing").at("blocks").contains("b"));
    CHECK(j1.at("cruising").at("a").contains("share"));

    const auto written_json = io::write_report(report, dir.path / "out_json", io::Format::json);
    REQUIRE(written_json.size() == 1);
    CHECK(fs::exists(written_json[0]));
    const auto written_csv = io::write_report(report, dir.path / "out_csv", io::Format::csv);
    CHECK(written_csv.size() == 3);
    for (const auto& p : written_csv) CHECK(fs::exists(p));
}

TEST_CASE("occupancy curves are monotone and convex per stall count") {
    TempDir dir;
    io::PlotOptions options;
    options.stall_counts = {1, 5, 10};
    options.points = 30;
    options.svg = true;
    const auto written = io::emit_occupancy_curves(options, dir.path);
    REQUIRE(written.size() == 2);

    std::ifstream in(written[0]);
    std::string line;
    std::getline(in, line);
    CHECK(line == "k,u,y");
    int last_k = -1;
    double last_y = -1.0, last_diff = -1.0;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        const int k = std::stoi(line.substr(0, c1));
        const double y = std::stod(line.substr(c2 + 1));
        if (k != last_k) {
            last_k = k;
            last_y = -1.0;
            last_diff = -1.0;
        } else {
            CHECK(y > last_y);
            if (last_y >= 0.0) {
                const double diff = y - last_y;
                if (last_diff >= 0.0) CHECK(diff > last_diff);
                last_diff = diff;
            }
        }
        last_y = y;
    }
    CHECK(rows == 3 * 30);
}

TEST_CASE("plot emission names what is missing") {
    io::Report report;
    TempDir dir;
    write_file(dir.path / "scenario.json", kMinimalScenario);
    report.scenario = io::load_scenario(dir.path / "scenario.json");
    CHECK_THROWS_WITH_AS(io::emit_cruising_shares(report, dir.path),
                         doctest::Contains("network flows"), ValidationError);
    CHECK_THROWS_WITH_AS(io::emit_price_control(report, dir.path),
                         doctest::Contains("network flows"), ValidationError);
    report.flows = net::estimate_from_occupancy(report.scenario.graph, report.scenario.blocks);
    CHECK_THROWS_WITH_AS(io::emit_price_control(report, dir.path),
                         doctest::Contains("pricing"), ValidationError);
    CHECK_THROWS_AS(io::emit_plot_data(report, "nonsense", dir.path), ValidationError);
}

TEST_CASE("hash and rounding helpers are stable") {
    CHECK(io::fnv1a64_hex("") == "cbf29ce484222325");
    CHECK(io::fnv1a64_hex("curbflow") == io::fnv1a64_hex("curbflow"));
    CHECK(io::fnv1a64_hex("a") != io::fnv1a64_hex("b"));
    CHECK(io::round12(1.0000000000000007) == 1.0);
    CHECK(io::round12(0.125) == 0.125);
    CHECK(io::round12(1.23456789012345e-7) == doctest::Approx(1.23456789012e-7).epsilon(1e-13));
}

TEST_SUITE_END();
