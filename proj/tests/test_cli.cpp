#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "treeclone/cli.hpp"

namespace {

struct Out {
  int code;
  std::string out, err;
};

Out run(std::vector<std::string> args) {
  args.insert(args.begin(), "treeclone");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = treeclone::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(TREECLONE_DATA) + "/" + name; }

nlohmann::ordered_json json_of(const Out& o) { return nlohmann::ordered_json::parse(o.out); }

}  // namespace

TEST_CASE("cli min and member", "[cli]") {
  auto m = run({"min", data("dup.dfta")});
  CHECK(m.code == 0);
  auto j = json_of(run({"--json", "min", data("dup.dfta")}));
  CHECK(j["verdict"]["states"] == 2);
  CHECK(j["verdict"]["automaton"] == m.out);

  auto yes = run({"member", data("exists.dfta"), "0_2(0_0,1_0)"});
  CHECK(yes.code == 0);
  CHECK(yes.out == "member: yes\n");
  auto no = run({"member", data("exists.dfta"), "0_2(0_0,0_0)"});
  CHECK(no.code == 1);
  CHECK(no.out == "member: no\n");
}

TEST_CASE("cli eval", "[cli]") {
  auto r = run({"eval", data("exists.dfta"), "0_2(v1,1_0)"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("eval: rank 1 ", 0) == 0);
  auto j = json_of(run({"--json", "eval", data("exists.dfta"), "0_2(v1,1_0)"}));
  CHECK(j["rank"] == 1);
}

TEST_CASE("cli checks", "[cli]") {
  auto fo = run({"check", "fosucc", data("exists.dfta")});
  CHECK(fo.code == 0);
  CHECK(fo.out == "FOSucc: yes\n");
  auto ex = run({"check", "ex", data("exists.dfta")});
  CHECK(ex.code == 1);
  CHECK(ex.out.rfind("EX: no\ncondition=ex", 0) == 0);
  CHECK(run({"check", "ex", data("rootlabel.dfta")}).code == 0);
  auto ef = run({"check", "ef", data("even.dfta")});
  CHECK(ef.code == 1);
  CHECK(ef.out.find("condition=ef-i") != std::string::npos);
  auto cap = run({"check", "ef", data("exists.dfta"), "--max-permutation-arity", "1"});
  CHECK(cap.code == 3);
  CHECK(cap.err.rfind("inconclusive:", 0) == 0);
}

TEST_CASE("cli json layout", "[cli]") {
  auto j = json_of(run({"--json", "check", "ex", data("exists.dfta")}));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys.front() == "verb");
  CHECK(keys[1] == "inputs");
  CHECK(keys[2] == "caps");
  CHECK(keys.back() == "timings");
  CHECK(j["verdict"] == "no");
  CHECK(j["condition"] == "ex");
  CHECK(j.contains("witness"));
  CHECK(j["timings"].empty());
  auto t = json_of(run({"--json", "--timings", "check", "ex", data("exists.dfta")}));
  CHECK(t["timings"].contains("total_ms"));
}

TEST_CASE("cli bool, equal and quotient", "[cli]") {
  CHECK(run({"equal", data("exists.dfta"), data("dup.dfta")}).code == 0);
  CHECK(run({"equal", data("exists.dfta"), data("rootlabel.dfta")}).code == 1);
  auto c = json_of(run({"--json", "bool", "complement", data("exists.dfta")}));
  CHECK(c["verdict"]["empty"] == false);
  auto x = json_of(run({"--json", "bool", "xor", data("exists.dfta"), data("dup.dfta")}));
  CHECK(x["verdict"]["empty"] == true);
  CHECK(run({"bool", "union", data("exists.dfta")}).code == 2);
  auto q = run({"quotient", "right", data("exists.dfta"), "0_0"});
  CHECK(q.code == 0);
  CHECK(q.out.rfind("quotient: rank 1", 0) == 0);
  auto l = run({"quotient", "left", data("exists.dfta"), "0_2(v1,0_0)", "--k1", "0", "--k2", "0"});
  CHECK(l.code == 0);
  CHECK(l.out.rfind("quotient: rank 0", 0) == 0);
}

TEST_CASE("cli divide and psv-member", "[cli]") {
  auto d = run({"divide", "T_exists", "T_exists"});
  CHECK(d.code == 0);
  CHECK(d.out.rfind("divide: yes\n", 0) == 0);
  CHECK(run({"divide", "T_2", "T_exists", "--power", "2"}).code == 1);
  CHECK(run({"divide", "T_2", "T_exists", "--power", "3", "--budget", "1"}).code == 3);
  CHECK(run({"divide", data("exists.dfta"), "T_exists"}).code == 0);
  auto p = run({"psv-member", "T_exists", "T_exists", "--max-power", "1"});
  CHECK(p.code == 0);
  CHECK(p.out.rfind("psv-member: yes\n", 0) == 0);
  auto n = run({"psv-member", "T_3", "T_2", "--max-power", "2"});
  CHECK(n.code == 3);
  CHECK(n.out.rfind("psv-member: inconclusive-if-false\n", 0) == 0);
}

TEST_CASE("cli corpus", "[cli]") {
  auto a = json_of(run({"--json", "corpus", "modcount", "3", "1"}));
  CHECK(a["verdict"]["states"] == 3);
  auto p = json_of(run({"--json", "--max-rank", "2", "corpus", "T_p", "5", "--emit", "preclone"}));
  CHECK(p["verdict"]["level_sizes"] == nlohmann::json::array({5, 5, 5}));
  auto e = json_of(run({"--json", "--max-rank", "2", "corpus", "exists", "--emit", "preclone"}));
  CHECK(e["verdict"]["level_sizes"] == nlohmann::json::array({2, 2, 2}));
  CHECK(run({"corpus", "T_exists"}).code == 2);
  CHECK(run({"corpus", "modcount", "3"}).code == 2);
}

TEST_CASE("cli errors", "[cli]") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"min", data("missing.dfta")}).code == 2);
  auto bad = run({"member", data("exists.dfta"), "0_2(0_0"});
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("error: tree", 0) == 0);
  const auto tmp = std::filesystem::temp_directory_path() / "treeclone_cli_bad.dfta";
  {
    std::ofstream f(tmp);
    f << "alphabet: a/0 f/1\nstates: q\nfinal: q\ntrans: a() -> q\n";
  }
  CHECK(run({"min", tmp.string()}).code == 2);
  std::filesystem::remove(tmp);
  CHECK(run({"check", "ag", data("exists.dfta")}).code == 2);
}

TEST_CASE("cli output is deterministic", "[cli]") {
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"synt", data("exists.dfta")}, {"check", "ef", data("boolexpr.dfta")},
        {"divide", "T_exists", "T_exists", "--power", "2"}}) {
    auto a = run(args), b = run(args);
    CHECK(a.out == b.out);
    auto ja = args;
    ja.insert(ja.begin(), "--json");
    CHECK(run(ja).out == run(ja).out);
  }
}
