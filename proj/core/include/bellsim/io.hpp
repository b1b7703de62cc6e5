// Flat-file formats: JSONL event logs (one TrialRecord per line), CSV
// counts/correlation tables, and the model description JSON consumed by
// the CLI.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bellsim/models.hpp"
#include "bellsim/tally.hpp"
#include "bellsim/trial.hpp"

namespace bellsim::io {

struct ParseError : std::runtime_error {
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_no(line) {}
    std::size_t line_no;
};

// {"i":…,"a":…,"b":…,"x":-1|1|null,"y":…,"ta":…,"tb":…}; a Loop-of-Four
// hidden trace rides along as "hv":{alpha,beta,lambda,lambda_a,lambda_b}.
std::string record_to_jsonl(const TrialRecord& r);
TrialRecord record_from_json(const std::string& line, std::size_t line_no = 0);

void write_log(std::ostream& out, std::span<const TrialRecord> log);
std::vector<TrialRecord> read_log(std::istream& in); // throws ParseError

// CSV with header i,j,npp,npm,nmp,nmm,e. Cells with no pairs get e empty.
void write_table_csv(std::ostream& out, const CountsTable& counts);
CountsTable read_table_csv(std::istream& in);

// Model description JSON:
//   {"kind":"singlet"|"photon-pair"|"eberhard"|"sign-lhv"|"loop-of-four"|
//           "nsphere-graph"|"automaton",
//    "r":0.5,                        (eberhard)
//    "id":"memory:feedback",         (automaton)
//    "k":2,"l":2,                    (automaton grid)
//    "settings":{"alice":[[..],..],"bob":[[..],..]}       coordinates, or
//    "angles_deg":{"alice":[0,45],"bob":[22.5,67.5]}      planar angles, or
//    "random_keys":{"dim":2,"k":30,"l":30}}               drawn from the run
//                                                         seed ("keys" stream)
models::ModelSpec model_from_json(const nlohmann::json& j, std::uint64_t seed);
models::ModelSpec read_model(const std::string& path, std::uint64_t seed);
nlohmann::json model_to_json(const models::ModelSpec& m);

} // namespace bellsim::io
