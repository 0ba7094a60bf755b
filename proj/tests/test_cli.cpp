#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "modecomb/cli.hpp"

using namespace modecomb;

namespace {

int cli(std::initializer_list<std::string> args) {
    std::vector<std::string> storage = {"mclab"};
    storage.insert(storage.end(), args);
    std::vector<const char*> argv;
    argv.reserve(storage.size());
    for (const auto& s : storage) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

const char* kConfigText = R"([dataset]
seed = 3
num_classes = 3
input_dim = 6
train_size = 120
test_size = 60
class_separation = 5

[arch]
depth = 3
base_width = 8

[train]
epochs = 3
batch_size = 60

[experiment]
grid_size = 5
triangle_resolution = 3
multipliers = 1
bins = 8
)";

struct CliDir {
    std::filesystem::path path;
    CliDir() : path(std::filesystem::temp_directory_path() /
                    ("modecomb-cli-" + std::to_string(::getpid()))) {
        std::filesystem::create_directories(path);
    }
    ~CliDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    void write(const std::string& name, const std::string& text) const {
        std::ofstream out(file(name), std::ios::binary);
        out << text;
    }
};

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, eol - pos));
        pos = eol + 1;
    }
    return lines;
}

}  // namespace

TEST_CASE("the cli pipeline runs end to end with byte-stable outputs") {
    const CliDir dir;
    dir.write("exp.cfg", kConfigText);
    const std::string cfg = dir.file("exp.cfg");

    REQUIRE(cli({"train", "--config", cfg, "--out", dir.file("a.mcw"), "--seed", "1"}) == 0);
    REQUIRE(cli({"train", "--config", cfg, "--out", dir.file("b.mcw"), "--seed", "2"}) == 0);

    ArchiveMeta meta_a, meta_b;
    const WeightsF a = load_weights(dir.file("a.mcw"), &meta_a);
    const WeightsF b = load_weights(dir.file("b.mcw"), &meta_b);
    CHECK(meta_a.seed == 1);
    CHECK(meta_b.seed == 2);
    CHECK(meta_a.config_digest == meta_b.config_digest);  // same config text
    CHECK(!meta_a.config_digest.empty());
    CHECK_FALSE(bitwise_equal(a, b));

    REQUIRE(cli({"align", "--model-a", dir.file("a.mcw"), "--model-b", dir.file("b.mcw"), "--out",
                 dir.file("pi.json")}) == 0);
    const PermutationSet pi = load_permutations(dir.file("pi.json"));
    REQUIRE(pi.perms.size() == 2);
    CHECK(pi.perms[0].size() == 8);

    REQUIRE(cli({"sweep", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("sweep.csv")}) == 0);
    const std::string sweep_text = read_file_bytes(dir.file("sweep.csv"));
    const std::vector<std::string> sweep_lines = lines_of(sweep_text);
    REQUIRE(sweep_lines.size() == 1 + 2 * 5);  // header + grid 5 x 1 sample x 2 splits
    CHECK(sweep_lines[0] == "scheme,param,sample_index,split,loss,accuracy");

    // The lambda = 0 grid point is model A evaluated directly.
    const ExperimentConfig config = parse_config(kConfigText);
    const auto data = make_dataset<float>(config.dataset);
    const SplitMetrics ma = evaluate_both(a, data);
    CHECK(sweep_lines[1] == "scalar,0,0,train," + detail::csv_number(ma.train.loss) + "," +
                                detail::csv_number(ma.train.accuracy));
    CHECK(sweep_lines[2] == "scalar,0,0,test," + detail::csv_number(ma.test.loss) + "," +
                                detail::csv_number(ma.test.accuracy));

    REQUIRE(cli({"sweep", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("sweep2.csv")}) == 0);
    CHECK(read_file_bytes(dir.file("sweep2.csv")) == sweep_text);  // reruns reproduce bytes

    REQUIRE(cli({"stitch", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("stitch.csv")}) == 0);
    const auto stitch_lines = lines_of(read_file_bytes(dir.file("stitch.csv")));
    CHECK(stitch_lines.size() == 1 + 2 * 4);  // cuts 0..3 for depth 3

    REQUIRE(cli({"minmax", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("minmax.csv")}) == 0);
    const auto minmax_lines = lines_of(read_file_bytes(dir.file("minmax.csv")));
    REQUIRE(minmax_lines.size() == 9);
    CHECK(minmax_lines[0] == "model,split,loss,accuracy");

    REQUIRE(cli({"extrapolate", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("extra.csv")}) == 0);
    const auto extra_lines = lines_of(read_file_bytes(dir.file("extra.csv")));
    CHECK(extra_lines.size() == 1 + 2 * 5);
    CHECK(extra_lines[1].rfind("extrapolate,-1,", 0) == 0);

    REQUIRE(cli({"triangle", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--model-c", dir.file("a.mcw"), "--perm-b", dir.file("pi.json"),
                 "--results", dir.file("triangle.csv")}) == 0);
    const auto triangle_lines = lines_of(read_file_bytes(dir.file("triangle.csv")));
    REQUIRE(triangle_lines.size() == 1 + 2 * 6);  // resolution 3 -> 3 + 2 + 1 points
    CHECK(triangle_lines[0] == "lambda_b,lambda_c,split,loss,accuracy");

    REQUIRE(cli({"perturb", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--results", dir.file("perturb.csv")}) == 0);
    const auto perturb_lines = lines_of(read_file_bytes(dir.file("perturb.csv")));
    REQUIRE(perturb_lines.size() == 3);  // default k_values = {2}
    CHECK(perturb_lines[0] == "k,split,loss_barrier,accuracy_barrier");

    REQUIRE(cli({"agreement", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--model-c", dir.file("a.mcw"), "--results",
                 dir.file("agree.csv")}) == 0);
    const auto agree_lines = lines_of(read_file_bytes(dir.file("agree.csv")));
    REQUIRE(agree_lines.size() == 9);
    CHECK(agree_lines[0] == "bucket,outcome,count");
    long total = 0;
    for (std::size_t i = 1; i < agree_lines.size(); ++i)
        total += std::stol(agree_lines[i].substr(agree_lines[i].rfind(',') + 1));
    CHECK(total == 60);  // buckets partition the test split

    REQUIRE(cli({"edges", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("edges.csv")}) == 0);
    const auto edge_lines = lines_of(read_file_bytes(dir.file("edges.csv")));
    REQUIRE(edge_lines.size() == 9);  // bins = 8
    long edge_total = 0;
    for (std::size_t i = 1; i < edge_lines.size(); ++i)
        edge_total += std::stol(edge_lines[i].substr(edge_lines[i].rfind(',') + 1));
    CHECK(edge_total == static_cast<long>(a.param_count()));

    REQUIRE(cli({"report", "--config", cfg, "--model-a", dir.file("a.mcw"), "--model-b",
                 dir.file("b.mcw"), "--perm", dir.file("pi.json"), "--results",
                 dir.file("report.csv")}) == 0);
    const auto report_lines = lines_of(read_file_bytes(dir.file("report.csv")));
    REQUIRE(report_lines.size() == 3);
    CHECK(report_lines[0] ==
          "split,loss_barrier,accuracy_barrier,worst_loss_index,worst_accuracy_index");

    REQUIRE(cli({"widths", "--config", cfg, "--results", dir.file("widths.csv")}) == 0);
    const auto width_lines = lines_of(read_file_bytes(dir.file("widths.csv")));
    REQUIRE(width_lines.size() == 3);  // one multiplier, one scheme, two splits
    CHECK(width_lines[1].rfind("1,scalar,train,", 0) == 0);
}

TEST_CASE("cli exit codes distinguish usage, validation, and io failures") {
    const CliDir dir;
    dir.write("exp.cfg", kConfigText);
    dir.write("bad.cfg", "[experiment]\ngrid_size = 1\n");
    dir.write("corrupt.mcw", "XXXXnot-an-archive");
    dir.write("bad.json", "{]");

    CHECK(cli({"--help"}) == 0);
    CHECK(cli({"frobnicate"}) == 1);               // unknown subcommand
    CHECK(cli({"train", "--config", dir.file("exp.cfg")}) == 1);  // missing --out
    CHECK(cli({"train", "--config", dir.file("bad.cfg"), "--out", dir.file("x.mcw")}) == 1);
    CHECK(cli({"train", "--config", dir.file("nothere.cfg"), "--out", dir.file("x.mcw")}) == 2);

    REQUIRE(cli({"train", "--config", dir.file("exp.cfg"), "--out", dir.file("a.mcw")}) == 0);
    CHECK(cli({"align", "--model-a", dir.file("a.mcw"), "--model-b", dir.file("corrupt.mcw"),
               "--out", dir.file("pi.json")}) == 1);
    CHECK(cli({"sweep", "--config", dir.file("exp.cfg"), "--model-a", dir.file("a.mcw"),
               "--model-b", dir.file("a.mcw"), "--perm", dir.file("bad.json"), "--results",
               dir.file("s.csv")}) == 1);
    CHECK(cli({"sweep", "--config", dir.file("exp.cfg"), "--model-a", dir.file("nothere.mcw"),
               "--model-b", dir.file("a.mcw"), "--results", dir.file("s.csv")}) == 2);
}
