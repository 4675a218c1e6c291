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

#include "forge/chart_forge.hpp"

#include <set>

#include "common/error.hpp"
#include "common/png.hpp"
#include "common/text.hpp"
#include "pipeline/log.hpp"

namespace fs = std::filesystem;

namespace chartforge::forge {

using gateway::ChatRequest;
using gateway::EmbedInput;
using gateway::ImagePart;
using gateway::Message;
using pipeline::Action;
using pipeline::Outcome;
using pipeline::RunContext;
using pipeline::StageResult;
using pipeline::WorkItem;

namespace {

Message user_with_image(const std::string& text, const Bytes& png) {
  Message m;
  m.role = gateway::Role::kUser;
  m.parts.push_back(text);
  m.parts.push_back(ImagePart{png, "image/png"});
  return m;
}

// Renders code through the broker; on failure returns nullopt and sets
// `status` to the broker status name.
std::optional<Bytes> try_render(RunContext& ctx, const std::string& code, double timeout_s, std::string& status) {
  try {
    Bytes png = ctx.broker->render_chart(code, timeout_s);
    status = "ok";
    return png;
  } catch (const broker::ExecutionFailure& e) {
    status = std::string(broker::status_name(e.status()));
    return std::nullopt;
  }
}

std::string chart_id_for_code(const std::string& code) { return content_id(code); }

std::vector<ChartRecord> records_of(const StageResult& r) { return chart_records_from_json(r.records); }

}  // namespace

std::vector<ChartRecord> dedup_by_chart_id(std::vector<ChartRecord> records) {
  std::set<std::string> seen;
  std::vector<ChartRecord> out;
  for (auto& r : records) {
    if (seen.insert(r.chart_id).second) out.push_back(std::move(r));
  }
  return out;
}

ScoreOutcome score_image(RunContext& ctx, const ScoringConfig& cfg, const Bytes& png, const std::string& chart_id) {
  if (cfg.rollouts < 1) fail(ErrorCode::kConfig, "rollout count must be >= 1");
  ChatRequest req;
  req.messages.push_back(user_with_image(ctx.prompts->get(prompts::kRollout), png));
  req.sampling = gateway::presets::rollout();
  req.n_samples = cfg.rollouts;
  req.seed = pipeline::derive_seed(ctx.seed, "rollout:" + chart_id);
  const auto completions = ctx.endpoint(cfg.rollout_endpoint).chat(req);

  ScoreOutcome out;
  std::vector<EmbedInput> inputs;
  inputs.push_back(EmbedInput::image(png));
  for (const auto& completion : completions) {
    RolloutAttempt attempt;
    auto code = text::extract_code(completion);
    if (!code) {
      attempt.status = "no_code";
    } else {
      attempt.code_id = content_id(*code);
      if (auto rendered = try_render(ctx, *code, cfg.render_timeout_s, attempt.status)) {
        attempt.image_ref = ctx.store->put(*rendered);
        inputs.push_back(EmbedInput::image(std::move(*rendered)));
      }
    }
    out.rollouts.push_back(std::move(attempt));
  }

  auto vectors = ctx.endpoint(cfg.embed_endpoint).embed(inputs);
  out.embedding = std::move(vectors[0].values);
  if (vectors.size() > 1) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < vectors.size(); ++i) rows.push_back(std::move(vectors[i].values));
    rpe::Matrix m = rpe::Matrix::from_rows(rows);
    out.rpe = rpe::rollout_posterior_entropy(completions.size(), &m, cfg.rpe);
  } else {
    out.rpe = rpe::rollout_posterior_entropy(completions.size(), nullptr, cfg.rpe);
  }
  return out;
}

std::vector<CorpusEntry> load_corpus(const fs::path& jsonl) {
  const fs::path base = jsonl.parent_path();
  std::vector<CorpusEntry> out;
  for (const Json& row : read_jsonl(jsonl)) {
    CorpusEntry e;
    if (row.contains("image")) e.image_path = (base / row["image"].get<std::string>()).string();
    if (row.contains("image_ref")) e.image_ref = row["image_ref"].get<std::string>();
    if (row.contains("code")) e.code = row["code"].get<std::string>();
    if (!e.image_path && !e.image_ref) {
      fail(ErrorCode::kInvalidInput, jsonl.string() + ": corpus line without image or image_ref");
    }
    out.push_back(std::move(e));
  }
  return out;
}

StageResult score_corpus(RunContext& ctx, const ScoringConfig& cfg, const std::vector<CorpusEntry>& corpus,
                         const std::string& stage) {
  struct Prepared {
    std::string chart_id;
    std::string image_ref;
    std::optional<std::string> code;
  };
  std::vector<Prepared> charts;
  std::set<std::string> seen;
  for (const auto& e : corpus) {
    Prepared p;
    if (e.image_ref) {
      p.image_ref = *e.image_ref;
      if (!ctx.store->contains(p.image_ref)) fail(ErrorCode::kInvalidInput, "store has no image " + p.image_ref);
    } else {
      Bytes png;
      std::string raw = read_text_file(*e.image_path);
      png.assign(raw.begin(), raw.end());
      if (!looks_like_png(png)) fail(ErrorCode::kInvalidInput, *e.image_path + " is not a PNG image");
      p.image_ref = ctx.store->put(png);
    }
    p.code = e.code;
    p.chart_id = e.code ? chart_id_for_code(*e.code) : p.image_ref.substr(0, 16);
    if (!seen.insert(p.chart_id).second) {
      pipeline::log_warn(stage + ": duplicate chart " + p.chart_id + " skipped");
      continue;
    }
    charts.push_back(std::move(p));
  }

  std::vector<WorkItem> items;
  for (const auto& c : charts) items.push_back(pipeline::single(c.chart_id));
  return pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        const Prepared& c = charts[i];
        ScoreOutcome s = score_image(ctx, cfg, ctx.store->get(c.image_ref), c.chart_id);
        if (!s.rpe) return std::vector<Outcome>{{c.chart_id, Action::kDropped, "no_valid_rollouts", {}, {}}};
        ChartRecord r;
        r.chart_id = c.chart_id;
        r.source = c.code ? ChartSource::kCoderSample : ChartSource::kExternal;
        r.code = c.code;
        r.image_ref = c.image_ref;
        r.embedding = std::move(s.embedding);
        r.rpe = s.rpe;
        r.rollouts = std::move(s.rollouts);
        Json detail = {{"valid", s.rpe->valid_count}, {"attempted", s.rpe->attempted_count}};
        if (s.rpe->few_valid()) detail["few_valid"] = true;
        return std::vector<Outcome>{{c.chart_id, Action::kEmitted, "", to_json(r), detail}};
      },
      ctx.max_parallel);
}

HardSplit filter_hard(const std::vector<ChartRecord>& records, double threshold) {
  std::string unscored;
  for (const auto& r : records) {
    if (!r.rpe) unscored += (unscored.empty() ? "" : ", ") + r.chart_id;
  }
  if (!unscored.empty()) fail(ErrorCode::kInvalidInput, "unscored records: " + unscored);
  HardSplit split;
  for (const auto& r : records) {
    if (r.rpe->at_least(threshold)) {
      split.hard.push_back(r);
      if (r.embedding && !split.index.contains(r.chart_id)) split.index.add(r.chart_id, *r.embedding);
    } else {
      split.rest.push_back(r);
    }
  }
  return split;
}

StageResult filter_hard_stage(RunContext& ctx, const std::vector<ChartRecord>& records, double threshold,
                              const std::string& stage) {
  filter_hard(records, threshold);  // validates before anything is logged
  std::vector<WorkItem> items;
  for (const auto& r : records) items.push_back(pipeline::single(r.chart_id));
  return pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        const ChartRecord& r = records[i];
        if (r.rpe->at_least(threshold)) return std::vector<Outcome>{{r.chart_id, Action::kRetained, "", to_json(r), {}}};
        return std::vector<Outcome>{{r.chart_id, Action::kDropped, "rpe_below_threshold", {}, {}}};
      },
      1);
}

StageResult cold_start(RunContext& ctx, const ColdStartConfig& cfg, const std::vector<ChartRecord>& hard,
                       const std::string& stage) {
  std::vector<WorkItem> items;
  for (const auto& r : hard) items.push_back(pipeline::single(r.chart_id));
  StageResult result = pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        const ChartRecord& src = hard[i];
        if (src.image_ref.empty()) fail(ErrorCode::kInvalidInput, "hard record " + src.chart_id + " has no image");
        ChatRequest req;
        req.messages.push_back(user_with_image(ctx.prompts->get(prompts::kCodegen), ctx.store->get(src.image_ref)));
        req.sampling = gateway::presets::codegen();
        req.seed = pipeline::derive_seed(ctx.seed, "codegen:" + src.chart_id);
        const std::string completion = ctx.endpoint(cfg.codegen_endpoint).chat(req).at(0);
        auto code = text::extract_code(completion);
        if (!code) return std::vector<Outcome>{{src.chart_id, Action::kDropped, "no_code", {}, {}}};
        std::string status;
        auto png = try_render(ctx, *code, cfg.render_timeout_s, status);
        if (!png) return std::vector<Outcome>{{src.chart_id, Action::kDropped, "render:" + status, {}, {}}};
        ChartRecord r;
        r.chart_id = chart_id_for_code(*code);
        r.source = ChartSource::kColdStart;
        r.code = std::move(code);
        r.image_ref = ctx.store->put(*png);
        r.parent = src.chart_id;
        return std::vector<Outcome>{{src.chart_id, Action::kRetained, "", to_json(r), {}}};
      },
      ctx.max_parallel);
  result.records = to_json(dedup_by_chart_id(records_of(result)));
  return result;
}

std::size_t export_coder_training_set(const std::vector<ChartRecord>& records, const fs::path& out,
                                      const std::string& system_prompt) {
  std::vector<Json> rows;
  for (const auto& r : records) {
    if (!r.code) fail(ErrorCode::kInvalidInput, "record " + r.chart_id + " has no code to export");
    rows.push_back({{"system", system_prompt}, {"output", *r.code}});
  }
  write_jsonl(out, rows);
  return rows.size();
}

StageResult sample_candidates(RunContext& ctx, const std::string& coder_endpoint, int count, int iteration,
                              const std::string& stage) {
  std::vector<WorkItem> items;
  for (int i = 0; i < count; ++i) items.push_back(pipeline::single("sample-" + std::to_string(i)));
  // Identical requests: dispatch in order so sample i always sees the same
  // response from a scripted backend.
  StageResult result = pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        const std::string id = items[i].record_ids[0];
        ChatRequest req;
        req.messages.push_back(Message::system(ctx.prompts->get(prompts::kCoderSystem)));
        req.messages.push_back(Message::user(""));
        req.sampling = gateway::presets::coder();
        req.seed = pipeline::derive_seed(ctx.seed, stage + ":" + id);
        const std::string completion = ctx.endpoint(coder_endpoint).chat(req).at(0);
        auto code = text::extract_code(completion);
        if (!code) return std::vector<Outcome>{{id, Action::kDropped, "no_code", {}, {}}};
        ChartRecord r;
        r.chart_id = chart_id_for_code(*code);
        r.source = ChartSource::kCoderSample;
        r.code = std::move(code);
        r.iteration = iteration;
        return std::vector<Outcome>{{id, Action::kEmitted, "", to_json(r), {}}};
      },
      1);
  result.records = to_json(dedup_by_chart_id(records_of(result)));
  return result;
}

bool boost_accept(const rpe::RpeScore& score, double max_sim, double rpe_threshold, double sim_limit) {
  return score.at_least(rpe_threshold) && max_sim <= sim_limit;
}

namespace {

struct Rendered {
  std::optional<Bytes> png;
  std::string status;
};

Rendered render_record(RunContext& ctx, const ChartRecord& r, double timeout_s) {
  Rendered out;
  if (!r.image_ref.empty()) {
    out.png = ctx.store->get(r.image_ref);
    out.status = "ok";
    return out;
  }
  if (!r.code) fail(ErrorCode::kInvalidInput, "record " + r.chart_id + " has neither image nor code");
  out.png = try_render(ctx, *r.code, timeout_s, out.status);
  return out;
}

}  // namespace

StageResult boost_filter(RunContext& ctx, const ScoringConfig& scoring, const BoostConfig& cfg,
                         const std::vector<ChartRecord>& candidates, const HardSeedIndex& index, int iteration,
                         const std::string& stage) {
  if (index.empty()) fail(ErrorCode::kInvalidInput, "boost filter needs a nonempty hard seed index");
  std::vector<WorkItem> items;
  for (const auto& r : candidates) items.push_back(pipeline::single(r.chart_id));
  return pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        ChartRecord r = candidates[i];
        Rendered rendered = render_record(ctx, r, scoring.render_timeout_s);
        if (!rendered.png) return std::vector<Outcome>{{r.chart_id, Action::kDropped, "render:" + rendered.status, {}, {}}};
        r.image_ref = ctx.store->put(*rendered.png);
        ScoreOutcome s = score_image(ctx, scoring, *rendered.png, r.chart_id);
        if (!s.rpe) return std::vector<Outcome>{{r.chart_id, Action::kDropped, "no_valid_rollouts", {}, {}}};
        r.rpe = s.rpe;
        r.embedding = std::move(s.embedding);
        r.rollouts = std::move(s.rollouts);
        r.max_sim_to_hard = *index.max_cosine(*r.embedding);
        r.iteration = iteration;
        if (!boost_accept(*r.rpe, *r.max_sim_to_hard, cfg.rpe_threshold, cfg.sim_limit)) {
          const char* cause = r.rpe->at_least(cfg.rpe_threshold) ? "too_similar" : "rpe_below_threshold";
          return std::vector<Outcome>{{r.chart_id, Action::kDropped, cause, {}, {}}};
        }
        return std::vector<Outcome>{{r.chart_id, Action::kRetained, "", to_json(r), {}}};
      },
      ctx.max_parallel);
}

StageResult synth_dataset(RunContext& ctx, const ScoringConfig& scoring, const std::vector<ChartRecord>& candidates,
                          double rpe_threshold, const std::string& stage) {
  std::vector<WorkItem> items;
  for (const auto& r : candidates) items.push_back(pipeline::single(r.chart_id));
  return pipeline::run_stage(
      ctx, stage, items,
      [&](std::size_t i, const std::set<std::string>&) {
        ChartRecord r = candidates[i];
        if (!r.rpe) {
          Rendered rendered = render_record(ctx, r, scoring.render_timeout_s);
          if (!rendered.png) {
            return std::vector<Outcome>{{r.chart_id, Action::kDropped, "render:" + rendered.status, {}, {}}};
          }
          r.image_ref = ctx.store->put(*rendered.png);
          ScoreOutcome s = score_image(ctx, scoring, *rendered.png, r.chart_id);
          if (!s.rpe) return std::vector<Outcome>{{r.chart_id, Action::kDropped, "no_valid_rollouts", {}, {}}};
          r.rpe = s.rpe;
          r.embedding = std::move(s.embedding);
          r.rollouts = std::move(s.rollouts);
        }
        if (!r.rpe->at_least(rpe_threshold)) {
          return std::vector<Outcome>{{r.chart_id, Action::kDropped, "rpe_below_threshold", {}, {}}};
        }
        return std::vector<Outcome>{{r.chart_id, Action::kRetained, "", to_json(r), {}}};
      },
      ctx.max_parallel);
}

}  // namespace chartforge::forge
