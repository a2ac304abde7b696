#pragma once

// JSON-lines readers/writers for the on-disk formats: instances, trajectories,
// step verdicts, score output, and prune reports. Readers are strict — every
// record must carry exactly the documented fields with the documented types —
// and all parse errors are Error(Schema) carrying "path:line:".

#include <string>
#include <vector>

#include "faithrl/core.hpp"
#include "faithrl/datagen.hpp"
#include "faithrl/grpo.hpp"

namespace faithrl::jsonl {

// {id, question, documents:[{doc_id, text}], evidence:[string], gold_answer,
//  answerable} — validated via Instance::validate per line.
std::vector<Instance> read_instances(const std::string& path);
void write_instances(const std::string& path, const std::vector<Instance>& instances);

// {instance_id, steps:[{text, cited_items:[string]}], answer, logprobs_old,
//  logprobs_new, step_spans:[[start, end]]} — validated via
// Trajectory::validate per line. Refusal phrasings in `answer` are folded to
// the IDK sentinel at parse time.
std::vector<TrajectoryRecord> read_trajectories(const std::string& path);
void write_trajectories(const std::string& path,
                        const std::vector<TrajectoryRecord>& records);

// {instance_id, trajectory_index, step_verdicts:[0|1]}
std::vector<VerdictRecord> read_verdicts(const std::string& path);
void write_verdicts(const std::string& path, const std::vector<VerdictRecord>& records);

// {instance_id, trajectory_index, advantage, modulation:[], modulated_advantage:[]}
std::vector<ScoreRecord> read_scores(const std::string& path);
void write_scores(const std::string& path, const std::vector<ScoreRecord>& records);

// {instance_id, status, removed_doc_ids:[], removed_hop_index,
//  density_prunes_applied, solvability:{attempts, successes, kept, ran}}
void write_prune_reports(const std::string& path, const std::vector<PruneReport>& reports);
std::vector<PruneReport> read_prune_reports(const std::string& path);

}  // namespace faithrl::jsonl
