// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CmdResult run_cli(const std::string& args) {
    static int serial = 0;
    const fs::path out_p = fs::temp_directory_path() / ("megan_cli_out_" + std::to_string(serial));
    const fs::path err_p = fs::temp_directory_path() / ("megan_cli_err_" + std::to_string(serial));
    ++serial;
    const std::string cmd =
        std::string(MEGAN_BIN) + " " + args + " >" + out_p.string() + " 2>" + err_p.string();
    const int raw = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_p);
    r.err = slurp(err_p);
    fs::remove(out_p);
    fs::remove(err_p);
    return r;
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("megan_cli_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

// Small-enough-to-be-instant architecture shared by every invocation below.
const std::string kTinySets =
    " --set model.n_generators=3 --set model.d_z=4 --set model.k_hidden=8"
    " --set model.m=6 --set model.trunk_width=10 --set model.d_hidden=8"
    " --set train.batch=8 --set eval.samples=150";

std::string run_dir_from(const std::string& stdout_text) {
    const std::string key = "run_dir = ";
    const auto pos = stdout_text.find(key);
    REQUIRE(pos != std::string::npos);
    const auto end = stdout_text.find('\n', pos);
    return stdout_text.substr(pos + key.size(), end - pos - key.size());
}

int count_occurrences(const std::string& hay, const std::string& needle) {
    int n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("cli: version and bad invocations") {
    CHECK(run_cli("--version").out == "megan 0.1.0\n");

    CmdResult miss = run_cli("train --config /nope/missing.cfg");
    CHECK(miss.code == 2);
    CHECK(miss.err.find("/nope/missing.cfg") != std::string::npos);

    CHECK(run_cli("train --set bogus.key=1 --set train.max_iters=1").code == 2);
    CHECK(run_cli("train --set nodelimiter").code == 2);
}

TEST_CASE("cli: train emits the full artifact set and is reproducible") {
    const fs::path root = fresh_dir("train");
    const std::string train_args = "train" + kTinySets +
                                   " --set train.max_iters=10 --set train.log_every=5"
                                   " --set train.ckpt_every=6 --out " + root.string();

    CmdResult first = run_cli(train_args);
    REQUIRE(first.code == 0);
    const fs::path run1 = run_dir_from(first.out);
    CHECK(first.out.find("iters_run = 10") != std::string::npos);
    CHECK(first.out.find("modes_covered = ") != std::string::npos);

    for (const char* name : {"manifest.txt", "config_resolved.txt", "metrics.csv",
                             "ckpt_init.bin", "ckpt_6.bin", "ckpt_final.bin", "eval_report.txt",
                             "mode_matrix.csv", "eval_summary.csv"}) {
        CHECK_MESSAGE(fs::exists(run1 / name), name);
    }

    const std::string manifest = slurp(run1 / "manifest.txt");
    CHECK(manifest.find("version = megan 0.1.0") != std::string::npos);
    CHECK(manifest.find("[config]") != std::string::npos);
    CHECK(manifest.find("model.n_generators = 3") != std::string::npos);
    CHECK(manifest.find("[result]") != std::string::npos);
    CHECK(manifest.find("iters_run = 10") != std::string::npos);

    // header + rows at iterations 5 and 10
    std::istringstream metrics(slurp(run1 / "metrics.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(metrics, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 3);

    CmdResult second = run_cli(train_args);
    REQUIRE(second.code == 0);
    const fs::path run2 = run_dir_from(second.out);
    REQUIRE(run1 != run2);
    CHECK(slurp(run1 / "metrics.csv") == slurp(run2 / "metrics.csv"));
    CHECK(slurp(run1 / "ckpt_final.bin") == slurp(run2 / "ckpt_final.bin"));
    CHECK(slurp(run1 / "eval_report.txt") == slurp(run2 / "eval_report.txt"));
}

TEST_CASE("cli: eval replays a checkpoint deterministically") {
    const fs::path root = fresh_dir("eval");
    CmdResult tr = run_cli("train" + kTinySets +
                           " --set train.max_iters=4 --set train.log_every=2 --out " +
                           root.string());
    REQUIRE(tr.code == 0);
    const fs::path run = run_dir_from(tr.out);
    const std::string ckpt = (run / "ckpt_final.bin").string();

    const fs::path eval_out = fresh_dir("eval_artifacts");
    const std::string eval_args = "eval " + ckpt + kTinySets + " --out " + eval_out.string();
    CmdResult e1 = run_cli(eval_args);
    REQUIRE(e1.code == 0);
    CHECK(e1.out.find("modes_covered = ") != std::string::npos);
    CHECK(e1.out.find("specialization_purity = ") != std::string::npos);
    CHECK(fs::exists(eval_out / "eval_report.txt"));
    CHECK(fs::exists(eval_out / "mode_matrix.csv"));
    CHECK(slurp(eval_out / "eval_report.txt") == e1.out);

    CmdResult e2 = run_cli(eval_args);
    CHECK(e2.out == e1.out);

    // architecture mismatch between flags and checkpoint is a config error
    CmdResult bad = run_cli("eval " + ckpt + kTinySets + " --set model.n_generators=4");
    CHECK(bad.code == 2);

    CHECK(run_cli("eval /no/such/ckpt.bin").code == 2);
}

TEST_CASE("cli: plot renders both figures from a finished run") {
    const fs::path root = fresh_dir("plot");
    CmdResult tr = run_cli("train" + kTinySets +
                           " --set train.max_iters=6 --set train.log_every=2 --out " +
                           root.string());
    REQUIRE(tr.code == 0);
    const fs::path run = run_dir_from(tr.out);

    CmdResult pl = run_cli("plot " + run.string());
    REQUIRE(pl.code == 0);
    REQUIRE(fs::exists(run / "scatter.svg"));
    REQUIRE(fs::exists(run / "curves.svg"));

    const std::string scatter = slurp(run / "scatter.svg");
    CHECK(scatter.rfind("<svg", 0) == 0);
    CHECK(count_occurrences(scatter, "legend-swatch") == 3);  // one per generator
    const std::string curves = slurp(run / "curves.svg");
    CHECK(curves.find("loss_d") != std::string::npos);
    CHECK(curves.find("</svg>") != std::string::npos);

    CHECK(run_cli("plot /no/such/run_dir").code == 2);
}

TEST_CASE("cli: non-finite training aborts with its own exit code") {
    const fs::path root = fresh_dir("abort");
    CmdResult r = run_cli("train" + kTinySets +
                          " --set train.lr_disc=1e308 --set train.max_iters=5 --out " +
                          root.string());
    CHECK(r.code == 3);
    CHECK(r.err.find("training aborted") != std::string::npos);
}

TEST_CASE("cli: --seed rewrites every stream, out dir falls back to MEGAN_OUT") {
    const fs::path root = fresh_dir("seeded");
    CmdResult r = run_cli("train" + kTinySets +
                          " --set train.max_iters=1 --seed 99 --out " + root.string());
    REQUIRE(r.code == 0);
    const std::string resolved = slurp(fs::path(run_dir_from(r.out)) / "config_resolved.txt");
    CHECK(resolved.find("seed.data = 1\n") == std::string::npos);
    CHECK(resolved.find("seed.eval = 4\n") == std::string::npos);

    const fs::path env_root = fresh_dir("envout");
    const std::string cmd = "MEGAN_OUT=" + env_root.string() + " " + std::string(MEGAN_BIN) +
                            " train" + kTinySets +
                            " --set train.max_iters=1 >/dev/null 2>/dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    bool found = false;
    for (const auto& entry : fs::directory_iterator(env_root))
        if (entry.is_directory() && entry.path().filename().string().rfind("run_", 0) == 0)
            found = true;
    CHECK(found);
}
