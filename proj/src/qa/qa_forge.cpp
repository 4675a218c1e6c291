// Copyright 2026 The Chartforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qa/qa_forge.hpp"

#include <set>

#include "broker/broker.hpp"
#include "common/error.hpp"
#include "common/text.hpp"

namespace fs = std::filesystem;

namespace chartforge::qa {

using gateway::ChatRequest;
using gateway::Message;
using pipeline::Action;
using pipeline::Outcome;
using pipeline::RunContext;
using pipeline::StageResult;
using pipeline::WorkItem;

Json to_json(const CotTrace& t) {
  Json j = {{"raw_text", t.raw_text}, {"matches_gt", t.matches_gt}, {"token_estimate", t.token_estimate}};
  j["extracted_answer"] = t.extracted_answer ? Json(*t.extracted_answer) : Json(nullptr);
  if (t.error) j["error"] = *t.error;
  if (t.filter) {
    Json failures = Json::array();
    for (const auto& f : t.filter->failures) failures.push_back({{"rule", cot::rule_name(f.rule)}, {"detail", f.detail}});
    j["filter"] = {{"passed", t.filter->passed()}, {"failures", failures}};
  }
  return j;
}

CotTrace cot_trace_from_json(const Json& j) {
  CotTrace t;
  t.raw_text = j.at("raw_text").get<std::string>();
  if (j.contains("extracted_answer") && j["extracted_answer"].is_string()) {
    t.extracted_answer = j["extracted_answer"].get<std::string>();
  }
  t.matches_gt = j.at("matches_gt").get<bool>();
  t.token_estimate = j.value("token_estimate", std::size_t{0});
  if (j.contains("error")) t.error = j["error"].get<std::string>();
  if (j.contains("filter")) {
    cot::FilterVerdict v;
    for (const auto& f : j["filter"].at("failures")) {
      const std::string rule = f.at("rule").get<std::string>();
      cot::Rule r = rule == "length" ? cot::Rule::kLength : rule == "ngram" ? cot::Rule::kNgram : cot::Rule::kTemplate;
      v.failures.push_back({r, f.value("detail", "")});
    }
    t.filter = std::move(v);
  }
  return t;
}

Json to_json(const QaCandidate& c) {
  Json j = {{"qa_id", c.qa_id},
            {"chart_id", c.chart_id},
            {"script_index", c.script_index},
            {"image_ref", c.image_ref},
            {"script", c.script},
            {"answer_py", c.answer_py},
            {"question", c.question},
            {"consistency_answer", c.consistency_answer},
            {"consistent", c.consistent}};
  if (!c.traces.empty()) {
    Json traces = Json::array();
    for (const auto& t : c.traces) traces.push_back(to_json(t));
    j["traces"] = std::move(traces);
  }
  if (c.rate) {
    j["fail_count"] = c.rate->failures;
    j["fail_rate"] = c.rate->value();
  }
  return j;
}

QaCandidate qa_candidate_from_json(const Json& j) {
  try {
    QaCandidate c;
    c.qa_id = j.at("qa_id").get<std::string>();
    c.chart_id = j.at("chart_id").get<std::string>();
    c.script_index = j.value("script_index", 0);
    c.image_ref = j.value("image_ref", "");
    c.script = j.value("script", "");
    c.answer_py = j.at("answer_py").get<std::string>();
    c.question = j.at("question").get<std::string>();
    c.consistency_answer = j.value("consistency_answer", "");
    c.consistent = j.value("consistent", false);
    if (j.contains("traces")) {
      for (const auto& t : j["traces"]) c.traces.push_back(cot_trace_from_json(t));
    }
    if (j.contains("fail_count")) {
      const int failures = j["fail_count"].get<int>();
      if (failures < 0 || failures > FailRate::kTraces) {
        fail(ErrorCode::kInvalidInput, "fail_count out of range for " + c.qa_id);
      }
      c.rate = FailRate{failures};
    }
    return c;
  } catch (const Json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("malformed QA candidate: ") + e.what());
  }
}

std::string make_qa_id(const std::string& chart_id, int script_index) {
  return content_id(chart_id + ":" + std::to_string(script_index));
}

std::vector<ChartInput> chart_inputs_from_json(const std::vector<Json>& rows) {
  std::vector<ChartInput> out;
  for (const auto& row : rows) {
    ChartInput c;
    c.chart_id = row.at("chart_id").get<std::string>();
    if (!row.contains("code")) fail(ErrorCode::kInvalidInput, "chart " + c.chart_id + " has no code for QA synthesis");
    c.code = row["code"].get<std::string>();
    c.image_ref = row.value("image_ref", "");
    out.push_back(std::move(c));
  }
  return out;
}

namespace {

std::string ask_text(RunContext& ctx, const std::string& endpoint, const std::string& prompt,
                     const std::string& seed_label) {
  ChatRequest req;
  req.messages.push_back(Message::user(prompt));
  req.sampling = gateway::presets::reasoning();
  req.seed = pipeline::derive_seed(ctx.seed, seed_label);
  return ctx.endpoint(endpoint).chat(req).at(0);
}

}  // namespace

std::string gen_answer_script(RunContext& ctx, const QaConfig& cfg, const std::string& code,
                              const std::string& seed_label) {
  const std::string prompt = ctx.prompts->render(prompts::kQaScript, {{std::string(prompts::kChartCode), code}});
  auto script = text::last_tagged(ask_text(ctx, cfg.qa_endpoint, prompt, seed_label), "answer");
  if (!script || text::trim(*script).empty()) fail(ErrorCode::kSynthesisParse, "no <answer> script in reply");
  return *script;
}

std::string gen_question(RunContext& ctx, const QaConfig& cfg, const std::string& code, const std::string& script,
                         const std::string& seed_label) {
  const std::string prompt = ctx.prompts->render(
      prompts::kQaQuestion, {{std::string(prompts::kChartCode), code}, {std::string(prompts::kScriptCode), script}});
  auto question = text::last_tagged(ask_text(ctx, cfg.qa_endpoint, prompt, seed_label), "question");
  if (!question || text::trim(*question).empty()) fail(ErrorCode::kSynthesisParse, "no <question> in reply");
  return std::string(text::trim(*question));
}

Consistency consistency_check(RunContext& ctx, const QaConfig& cfg, const std::string& code,
                              const std::string& question, const std::string& answer_py,
                              const std::string& seed_label) {
  const std::string prompt = ctx.prompts->render(
      prompts::kQaConsistency,
      {{std::string(prompts::kChartCode), code}, {std::string(prompts::kGeneratedQuestion), question}});
  Consistency out;
  out.answer = extract_final_answer(ask_text(ctx, cfg.qa_endpoint, prompt, seed_label));
  out.consistent = out.answer && cfg.matcher(*out.answer, answer_py);
  return out;
}

std::string ground_truth(RunContext& ctx, const QaConfig& cfg, const std::string& script) {
  return ctx.broker->run_script(script, cfg.script_timeout_s);
}

std::vector<CotTrace> distill_traces(RunContext& ctx, const QaConfig& cfg, const Bytes& png,
                                     const std::string& question, const std::string& answer_py,
                                     const std::string& seed_label) {
  const std::string prompt = ctx.prompts->render(prompts::kCotDistill, {{std::string(prompts::kQuestion), question}});
  std::vector<CotTrace> traces;
  for (int j = 0; j < cfg.traces; ++j) {
    ChatRequest req;
    Message m;
    m.parts.push_back(prompt);
    m.parts.push_back(gateway::ImagePart{png, "image/png"});
    req.messages.push_back(std::move(m));
    req.sampling = gateway::presets::reasoning();
    req.seed = pipeline::derive_seed(ctx.seed, seed_label + ":" + std::to_string(j));
    CotTrace t;
    try {
      t.raw_text = ctx.endpoint(cfg.distill_endpoint).chat(req).at(0);
      t.extracted_answer = extract_final_answer(t.raw_text);
      t.matches_gt = t.extracted_answer && cfg.matcher(*t.extracted_answer, answer_py);
      t.token_estimate = text::split_whitespace(t.raw_text).size();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kTransport && e.code() != ErrorCode::kProtocol &&
          e.code() != ErrorCode::kScriptedGap) {
        throw;
      }
      t.error = std::string(error_code_name(e.code())) + ": " + e.what();
    }
    traces.push_back(std::move(t));
  }
  return traces;
}

StageResult qa_synth(RunContext& ctx, const QaConfig& cfg, const std::vector<ChartInput>& charts,
                     const std::string& stage) {
  if (cfg.scripts_per_chart < 1) fail(ErrorCode::kConfig, "scripts_per_chart must be >= 1");
  std::vector<WorkItem> items;
  for (const auto& c : charts) {
    WorkItem item;
    for (int s = 0; s < cfg.scripts_per_chart; ++s) item.record_ids.push_back(make_qa_id(c.chart_id, s));
    items.push_back(std::move(item));
  }
  // Scripts of one chart share a prompt, so they are requested in order
  // within the item.
  return pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>& done) {
        const ChartInput& chart = charts[i];
        std::vector<Outcome> outcomes;
        for (int s = 0; s < cfg.scripts_per_chart; ++s) {
          const std::string qa_id = items[i].record_ids[static_cast<std::size_t>(s)];
          if (done.count(qa_id)) continue;
          auto drop = [&](std::string cause) {
            outcomes.push_back({qa_id, Action::kDropped, std::move(cause), {}, {}});
          };
          try {
            QaCandidate c;
            c.qa_id = qa_id;
            c.chart_id = chart.chart_id;
            c.script_index = s;
            c.image_ref = chart.image_ref;
            try {
              c.script = gen_answer_script(ctx, cfg, chart.code, "qa-script:" + qa_id);
            } catch (const Error& e) {
              if (e.code() != ErrorCode::kSynthesisParse) throw;
              drop("parse:script");
              continue;
            }
            try {
              c.answer_py = ground_truth(ctx, cfg, c.script);
            } catch (const broker::ExecutionFailure& e) {
              drop("exec:" + std::string(broker::status_name(e.status())));
              continue;
            } catch (const Error& e) {
              if (e.code() != ErrorCode::kProtocol) throw;
              drop("exec:protocol");
              continue;
            }
            try {
              c.question = gen_question(ctx, cfg, chart.code, c.script, "qa-question:" + qa_id);
            } catch (const Error& e) {
              if (e.code() != ErrorCode::kSynthesisParse) throw;
              drop("parse:question");
              continue;
            }
            Consistency k = consistency_check(ctx, cfg, chart.code, c.question, c.answer_py, "qa-check:" + qa_id);
            c.consistency_answer = k.answer.value_or("");
            c.consistent = k.consistent;
            if (!k.answer) {
              drop("inconsistent:no_answer");
            } else if (!k.consistent) {
              drop("inconsistent");
            } else {
              outcomes.push_back({qa_id, Action::kRetained, "", to_json(c), {}});
            }
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kTransport && e.code() != ErrorCode::kScriptedGap &&
                e.code() != ErrorCode::kProtocol) {
              throw;
            }
            outcomes.push_back(
                {qa_id, Action::kFailed, std::string(error_code_name(e.code())) + ": " + e.what(), {}, {}});
          }
        }
        return outcomes;
      },
      ctx.max_parallel);
}

StageResult cot_distill(RunContext& ctx, const QaConfig& cfg, const std::vector<QaCandidate>& pairs,
                        const std::string& stage) {
  if (cfg.traces != FailRate::kTraces) {
    fail(ErrorCode::kConfig, "fail rates are defined over exactly 3 traces, configured " + std::to_string(cfg.traces));
  }
  std::vector<WorkItem> items;
  for (const auto& p : pairs) items.push_back(pipeline::single(p.qa_id));
  return pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        QaCandidate c = pairs[i];
        if (!c.consistent) {
          return std::vector<Outcome>{{c.qa_id, Action::kDropped, "inconsistent", {}, {}}};
        }
        if (c.image_ref.empty()) fail(ErrorCode::kInvalidInput, "candidate " + c.qa_id + " has no image");
        c.traces = distill_traces(ctx, cfg, ctx.store->get(c.image_ref), c.question, c.answer_py, "distill:" + c.qa_id);
        std::vector<bool> matches;
        for (const auto& t : c.traces) matches.push_back(t.matches_gt);
        c.rate = fail_rate(matches);
        return std::vector<Outcome>{{c.qa_id, Action::kEmitted, "", to_json(c), {}}};
      },
      ctx.max_parallel);
}

CotFilterReport cot_filter(const std::vector<QaCandidate>& candidates, const cot::FilterOptions& options) {
  CotFilterReport report;
  for (const auto& rule : {cot::Rule::kTemplate, cot::Rule::kLength, cot::Rule::kNgram}) {
    report.histogram[std::string(cot::rule_name(rule))] = 0;
  }
  for (QaCandidate c : candidates) {
    for (std::size_t j = 0; j < c.traces.size(); ++j) {
      CotTrace& t = c.traces[j];
      t.filter = cot::filter_trace(t.raw_text, options);
      Json row = {{"qa_id", c.qa_id}, {"trace_index", j}, {"text", t.raw_text}};
      if (t.filter->passed()) {
        report.passed.push_back(std::move(row));
      } else {
        Json failures = Json::array();
        for (const auto& f : t.filter->failures) {
          ++report.histogram[std::string(cot::rule_name(f.rule))];
          failures.push_back({{"rule", cot::rule_name(f.rule)}, {"detail", f.detail}});
        }
        row["failures"] = std::move(failures);
        report.rejected.push_back(std::move(row));
      }
    }
    report.candidates.push_back(std::move(c));
  }
  return report;
}

namespace {

Json provenance(const QaCandidate& c) {
  return {{"chart_id", c.chart_id},
          {"script_index", c.script_index},
          {"script", c.script},
          {"consistency_answer", c.consistency_answer},
          {"fail_count", c.rate->failures}};
}

}  // namespace

BucketOutput bucket_candidates(const std::vector<QaCandidate>& candidates, std::size_t rl_quota) {
  std::set<std::string> ids;
  for (const auto& c : candidates) {
    if (!ids.insert(c.qa_id).second) fail(ErrorCode::kInvalidInput, "duplicate qa_id " + c.qa_id);
    if (!c.rate) fail(ErrorCode::kInvalidInput, "candidate " + c.qa_id + " has no fail rate");
  }
  // rl needs no trace; sft needs one that reached the answer and passed the
  // trace filter.
  auto supervision = [](const QaCandidate& c) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < c.traces.size(); ++j) {
      const CotTrace& t = c.traces[j];
      if (t.matches_gt && (!t.filter || t.filter->passed())) return j;
    }
    return std::nullopt;
  };

  std::vector<BucketInput> inputs;
  for (const auto& c : candidates) inputs.push_back({c.qa_id, c.consistent, *c.rate});
  const std::vector<Bucket> buckets = bucket(inputs, rl_quota);

  BucketOutput out;
  std::vector<std::pair<const QaCandidate*, Json>> rl;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const QaCandidate& c = candidates[i];
    Json base = {{"qa_id", c.qa_id},
                 {"image_ref", c.image_ref},
                 {"question", c.question},
                 {"answer", c.answer_py},
                 {"fail_rate", c.rate->value()},
                 {"provenance", provenance(c)}};
    switch (buckets[i]) {
      case Bucket::kRejected: {
        std::string cause = !c.consistent ? "inconsistent" : c.rate->failures == 0 ? "trivial" : "unsolved";
        out.rejected.push_back({{"qa_id", c.qa_id}, {"cause", cause}, {"fail_rate", c.rate->value()}});
        break;
      }
      case Bucket::kRl:
        rl.emplace_back(&c, std::move(base));
        break;
      case Bucket::kSft: {
        auto j = supervision(c);
        if (!j) {
          out.rejected.push_back({{"qa_id", c.qa_id}, {"cause", "cot_filter"}, {"fail_rate", c.rate->value()}});
          break;
        }
        base["cot_trace"] = c.traces[*j].raw_text;
        base["provenance"]["trace_index"] = *j;
        out.sft.push_back(std::move(base));
        break;
      }
    }
  }
  std::stable_sort(rl.begin(), rl.end(), [](const auto& a, const auto& b) {
    if (a.first->rate->failures != b.first->rate->failures) return a.first->rate->failures > b.first->rate->failures;
    return a.first->qa_id < b.first->qa_id;
  });
  for (auto& [c, row] : rl) out.rl.push_back(std::move(row));
  return out;
}

BucketOutput bucket_stage(RunContext& ctx, const std::vector<QaCandidate>& candidates, std::size_t rl_quota,
                          const std::string& stage) {
  BucketOutput out = bucket_candidates(candidates, rl_quota);
  std::map<std::string, Outcome> by_id;
  for (const auto& row : out.sft) {
    const std::string id = row["qa_id"];
    by_id[id] = {id, Action::kRetained, "sft", row, {}};
  }
  for (const auto& row : out.rl) {
    const std::string id = row["qa_id"];
    by_id[id] = {id, Action::kRetained, "rl", row, {}};
  }
  for (const auto& row : out.rejected) {
    const std::string id = row["qa_id"];
    by_id[id] = {id, Action::kDropped, row["cause"], {}, {}};
  }
  std::vector<WorkItem> items;
  for (const auto& c : candidates) items.push_back(pipeline::single(c.qa_id));
  pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) { return std::vector<Outcome>{by_id.at(candidates[i].qa_id)}; },
      1);
  return out;
}

std::vector<Violation> validate_dataset(const fs::path& dir) {
  std::vector<Violation> out;
  std::set<std::string> seen;
  for (const std::string name : {"sft.jsonl", "rl.jsonl"}) {
    const fs::path file = dir / name;
    if (!fs::exists(file)) {
      out.push_back({file.string(), 0, "", "missing file"});
      continue;
    }
    const bool sft = name == "sft.jsonl";
    std::size_t line = 0;
    for (const Json& row : read_jsonl(file)) {
      ++line;
      auto add = [&](std::string qa_id, std::string reason) {
        out.push_back({file.string(), line, std::move(qa_id), std::move(reason)});
      };
      if (!row.is_object() || !row.contains("qa_id") || !row["qa_id"].is_string()) {
        add("", "record without qa_id");
        continue;
      }
      const std::string qa_id = row["qa_id"];
      try {
        if (!seen.insert(qa_id).second) add(qa_id, "qa_id appears more than once");
        const std::string answer = row.at("answer").get<std::string>();
        const Json& prov = row.at("provenance");
        if (!match(prov.at("consistency_answer").get<std::string>(), answer)) {
          add(qa_id, "consistency answer does not match the ground truth");
        }
        const int failures = prov.at("fail_count").get<int>();
        const double rate = row.at("fail_rate").get<double>();
        if (failures <= 0 || failures >= FailRate::kTraces) add(qa_id, "fail rate outside (0, 1)");
        if (rate != FailRate{failures}.value()) add(qa_id, "fail_rate disagrees with fail_count");
        if (sft) {
          auto extracted = extract_final_answer(row.at("cot_trace").get<std::string>());
          if (!extracted || !match(*extracted, answer)) add(qa_id, "supervision trace does not reach the answer");
        }
      } catch (const Json::exception& e) {
        add(qa_id, std::string("malformed record: ") + e.what());
      }
    }
  }
  return out;
}

JudgeHook make_endpoint_judge(gateway::ModelEndpoint& endpoint) {
  return [&endpoint](std::string_view a, std::string_view b) {
    ChatRequest req;
    req.messages.push_back(Message::user(
        "Do these two answers to the same question state the same result? Reply with yes or no only.\n"
        "Answer 1: " + std::string(a) + "\nAnswer 2: " + std::string(b)));
    req.sampling = gateway::presets::reasoning();
    req.seed = 0;
    const std::string reply = text::ascii_lower(text::trim(endpoint.chat(req).at(0)));
    return reply.rfind("yes", 0) == 0;
  };
}

}  // namespace chartforge::qa
