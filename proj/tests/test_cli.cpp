// Drives the tdf executable as a subprocess.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "support/temp_dir.hpp"
#include "tdf/binary_io.hpp"
#include "tdf/tensorio.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result run(const testing::TempDir& dir, const std::string& args) {
    const auto out = dir / "stdout.txt";
    const auto err = dir / "stderr.txt";
    const std::string cmd = std::string("\"") + TDF_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, '\t');) out.push_back(f);
    return out;
}

bool single_line(const std::string& s) { return !s.empty() && s.find('\n') == s.size() - 1; }

// Tiny synthetic dataset plus an average/average config.
struct Fixture {
    testing::TempDir dir{"cli"};
    std::filesystem::path manifest;
    std::filesystem::path config;

    Fixture() {
        write_text(dir / "spec.txt", "videos_per_class=9\ndims=4\nmin_frames=20\nmax_frames=40\nseed=5\n");
        write_text(dir / "cfg.txt", "spectrum_length=16\n");
        const auto r = run(dir, "synth --spec " + q(dir / "spec.txt") + " --out " + q(dir / "data"));
        REQUIRE(r.code == 0);
        manifest = dir / "data" / "manifest.tsv";
        config = dir / "cfg.txt";
    }
};

}  // namespace

TEST_CASE("synth writes a readable, reproducible dataset") {
    testing::TempDir dir("cli_synth");
    write_text(dir / "spec.txt", "videos_per_class=4\ndims=3\nmin_frames=16\nmax_frames=30\n");
    const auto a = run(dir, "synth --spec " + q(dir / "spec.txt") + " --out " + q(dir / "a"));
    REQUIRE(a.code == 0);
    CHECK(a.out == (dir / "a" / "manifest.tsv").string() + "\n");
    const auto manifest = tdf::read_manifest(dir / "a" / "manifest.tsv");
    CHECK(manifest.entries.size() == 8);
    for (const auto& e : manifest.entries) CHECK_NOTHROW(tdf::read_feature_sequence(e.feature_path));

    REQUIRE(run(dir, "synth --spec " + q(dir / "spec.txt") + " --out " + q(dir / "b")).code == 0);
    CHECK(slurp(dir / "a" / "manifest.tsv") == slurp(dir / "b" / "manifest.tsv"));
    for (const auto& e : manifest.entries) {
        CHECK(slurp(e.feature_path) == slurp(dir / "b" / "features" / e.feature_path.filename()));
    }

    // A regular file where a directory is needed.
    write_text(dir / "blocker", "x");
    const auto bad = run(dir, "synth --spec " + q(dir / "spec.txt") + " --out " + q(dir / "blocker" / "sub"));
    CHECK(bad.code == 3);
    CHECK(single_line(bad.err));

    const auto missing = run(dir, "synth --spec " + q(dir / "nope.txt") + " --out " + q(dir / "c"));
    CHECK(missing.code == 1);
    CHECK(missing.err.find("nope.txt") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    testing::TempDir dir("cli_usage");
    CHECK(run(dir, "").code == 1);
    CHECK(run(dir, "frobnicate").code == 1);
    const auto r = run(dir, "run --manifest x");
    CHECK(r.code == 1);
    CHECK(single_line(r.err));
}

TEST_CASE("run prints per-run rows and their mean") {
    Fixture f;
    const auto one = run(f.dir, "run --config " + q(f.config) + " --manifest " + q(f.manifest) + " --repeat 1");
    REQUIRE(one.code == 0);
    const auto rows = lines(one.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "run\toverall\tclass_0\tclass_1");
    CHECK(fields(rows[1])[0] == "1");
    CHECK(fields(rows[2])[0] == "mean");
    CHECK(fields(rows[2])[1] == fields(rows[1])[1]);

    const auto ten = run(f.dir, "run --config " + q(f.config) + " --manifest " + q(f.manifest) + " --repeat 10");
    REQUIRE(ten.code == 0);
    const auto t = lines(ten.out);
    REQUIRE(t.size() == 12);
    double sum = 0;
    for (int i = 1; i <= 10; ++i) sum += std::stod(fields(t[i])[1]);
    CHECK(std::abs(std::stod(fields(t[11])[1]) - sum / 10.0) <= 5e-7);

    const auto missing = run(f.dir, "run --config " + q(f.dir / "absent.cfg") + " --manifest " + q(f.manifest));
    CHECK(missing.code == 1);
    CHECK(single_line(missing.err));
    CHECK(missing.err.find((f.dir / "absent.cfg").string()) != std::string::npos);

    write_text(f.dir / "bad.cfg", "spectrum_length=abc\n");
    CHECK(run(f.dir, "run --config " + q(f.dir / "bad.cfg") + " --manifest " + q(f.manifest)).code == 1);

    const auto no_manifest = run(f.dir, "run --config " + q(f.config) + " --manifest " + q(f.dir / "none.tsv"));
    CHECK(no_manifest.code == 2);
    CHECK(single_line(no_manifest.err));
}

TEST_CASE("staged execution reproduces run") {
    Fixture f;
    const auto mono = run(f.dir, "run --config " + q(f.config) + " --manifest " + q(f.manifest) +
                                     " --repeat 2 --reports " + q(f.dir / "reports"));
    REQUIRE(mono.code == 0);

    for (int r = 1; r <= 2; ++r) {
        const auto b = f.dir / ("bundle" + std::to_string(r));
        const auto e = f.dir / ("enc" + std::to_string(r));
        REQUIRE(run(f.dir, "fit --config " + q(f.config) + " --manifest " + q(f.manifest) + " --out " + q(b) +
                               " --run " + std::to_string(r))
                    .code == 0);
        REQUIRE(run(f.dir, "encode --config " + q(f.config) + " --bundle " + q(b) + " --manifest " +
                               q(b / "train.tsv") + " --out " + q(e / "train"))
                    .code == 0);
        REQUIRE(run(f.dir, "encode --config " + q(f.config) + " --bundle " + q(b) + " --manifest " +
                               q(b / "test.tsv") + " --out " + q(e / "test"))
                    .code == 0);
        REQUIRE(run(f.dir, "train --config " + q(f.config) + " --encoded " + q(e / "train" / "index.tsv") +
                               " --out " + q(e / "model.tdfm"))
                    .code == 0);
        const auto ev = run(f.dir, "evaluate --model " + q(e / "model.tdfm") + " --encoded " +
                                       q(e / "test" / "index.tsv"));
        REQUIRE(ev.code == 0);
        CHECK(ev.out == slurp(f.dir / "reports" / ("run_" + std::to_string(r) + ".tsv")));

        const auto pr = run(f.dir, "predict --model " + q(e / "model.tdfm") + " --encoded " +
                                       q(e / "test" / "index.tsv"));
        REQUIRE(pr.code == 0);
        const auto rows = lines(pr.out);
        CHECK(rows.size() == 6);
        for (const auto& row : rows) CHECK(fields(row).size() == 4);
    }
}

TEST_CASE("stage artifacts are checked") {
    Fixture f;
    write_text(f.dir / "pca3.cfg", "pca_dims=3\nspectrum_length=16\n");
    write_text(f.dir / "pca2.cfg", "pca_dims=2\nspectrum_length=16\n");
    REQUIRE(run(f.dir, "fit --config " + q(f.dir / "pca3.cfg") + " --manifest " + q(f.manifest) + " --out " +
                           q(f.dir / "b3") + " --all")
                .code == 0);
    CHECK(std::filesystem::exists(f.dir / "b3" / "pca.tdfp"));
    CHECK_FALSE(std::filesystem::exists(f.dir / "b3" / "train.tsv"));

    const auto mismatch = run(f.dir, "encode --config " + q(f.dir / "pca2.cfg") + " --bundle " + q(f.dir / "b3") +
                                         " --manifest " + q(f.manifest) + " --out " + q(f.dir / "e"));
    CHECK(mismatch.code == 2);
    CHECK(single_line(mismatch.err));
    CHECK(mismatch.err.find("encode") != std::string::npos);
    CHECK(mismatch.err.find("pca") != std::string::npos);

    const auto no_bundle = run(f.dir, "encode --config " + q(f.config) + " --bundle " + q(f.dir / "nothing") +
                                          " --manifest " + q(f.manifest) + " --out " + q(f.dir / "e"));
    CHECK(no_bundle.code == 2);

    const auto no_index = run(f.dir, "train --config " + q(f.config) + " --encoded " + q(f.dir / "none.tsv") +
                                         " --out " + q(f.dir / "m.tdfm"));
    CHECK(no_index.code == 2);
    CHECK(no_index.err.rfind("tdf train:", 0) == 0);

    const auto no_model = run(f.dir, "evaluate --model " + q(f.dir / "none.tdfm") + " --encoded " + q(f.manifest));
    CHECK(no_model.code == 2);
    CHECK(no_model.err.rfind("tdf evaluate:", 0) == 0);

    // Raw feature files are not encoded vectors.
    write_text(f.dir / "junk.tdfm", "TDFMxxxx");
    const auto corrupt = run(f.dir, "predict --model " + q(f.dir / "junk.tdfm") + " --encoded " + q(f.manifest));
    CHECK(corrupt.code == 2);
    CHECK(single_line(corrupt.err));

    REQUIRE(run(f.dir, "encode --config " + q(f.config) + " --bundle " + q(f.dir / "b3") + " --manifest " +
                           q(f.manifest) + " --out " + q(f.dir / "plain"))
                .code == 2);
    write_text(f.dir / "blocker", "x");
    REQUIRE(run(f.dir, "fit --config " + q(f.config) + " --manifest " + q(f.manifest) + " --out " +
                           q(f.dir / "ok") + " --all")
                .code == 0);
    const auto unwritable = run(f.dir, "encode --config " + q(f.config) + " --bundle " + q(f.dir / "ok") +
                                           " --manifest " + q(f.manifest) + " --out " + q(f.dir / "blocker" / "x"));
    CHECK(unwritable.code == 3);
}

TEST_CASE("predict recovers the training labels of a separable problem") {
    testing::TempDir dir("cli_toy");
    std::filesystem::create_directories(dir / "f");
    std::string manifest;
    for (int i = 0; i < 12; ++i) {
        const int label = i % 2;
        Eigen::MatrixXd frames = Eigen::MatrixXd::Constant(3, 10, 0.2);
        frames.row(0).setConstant(label == 0 ? 1.0 : -1.0);
        frames(2, i % 10) += 0.05 * i;
        const std::string id = "toy" + std::to_string(i);
        tdf::write_feature_sequence(tdf::FeatureSequence(frames), dir / "f" / (id + ".tdfe"));
        manifest += id + "\tf/" + id + ".tdfe\t" + std::to_string(label) + "\n";
    }
    write_text(dir / "m.tsv", manifest);
    write_text(dir / "cfg.txt", "use_dft_branch=false\nfusion_time_norm=1\nspectrum_length=8\n");

    REQUIRE(run(dir, "fit --config " + q(dir / "cfg.txt") + " --manifest " + q(dir / "m.tsv") + " --out " +
                         q(dir / "b") + " --all")
                .code == 0);
    REQUIRE(run(dir, "encode --config " + q(dir / "cfg.txt") + " --bundle " + q(dir / "b") + " --manifest " +
                         q(dir / "m.tsv") + " --out " + q(dir / "e"))
                .code == 0);
    REQUIRE(run(dir, "train --config " + q(dir / "cfg.txt") + " --encoded " + q(dir / "e" / "index.tsv") + " --out " +
                         q(dir / "m.tdfm"))
                .code == 0);
    const auto pr = run(dir, "predict --model " + q(dir / "m.tdfm") + " --encoded " + q(dir / "e" / "index.tsv"));
    REQUIRE(pr.code == 0);
    const auto rows = lines(pr.out);
    REQUIRE(rows.size() == 12);
    for (const auto& row : rows) {
        const auto f = fields(row);
        const int i = std::stoi(f[0].substr(3));
        CHECK(std::stoi(f[1]) == i % 2);
    }
}
