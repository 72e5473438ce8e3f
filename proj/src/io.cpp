// Copyright 2026 The impulsekit Authors
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

#include "impulsekit/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace impulsekit {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw_usage(what + ": malformed JSON document");
  return doc;
}

const json& require_field(const json& obj, const std::string& key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw_usage(where + ": missing field '" + key + "'");
  return *it;
}

Vec3d parse_vec3(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() != 3) throw_usage(where + ": expected 3 numbers");
  return Vec3d(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>());
}

json vec_to_json(const Eigen::Ref<const VecXd>& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json mat_to_json(const MatXd& m) {
  json doc;
  doc["rows"] = static_cast<int>(m.rows());
  doc["cols"] = static_cast<int>(m.cols());
  json data = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  doc["data"] = data;
  return doc;
}

MatXd mat_from_json(const json& doc, const std::string& where) {
  if (!doc.is_object() || !doc.contains("rows") || !doc.contains("cols") ||
      !doc.contains("data")) {
    throw_usage(where + ": expected a matrix object");
  }
  const int nr = doc["rows"].get<int>();
  const int nc = doc["cols"].get<int>();
  const json& data = doc["data"];
  if (static_cast<int>(data.size()) != nr * nc) throw_usage(where + ": matrix size mismatch");
  MatXd m(nr, nc);
  int at = 0;
  for (int r = 0; r < nr; ++r) {
    for (int c = 0; c < nc; ++c) m(r, c) = data[at++].get<double>();
  }
  return m;
}

VecXd vec_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw_usage(where + ": expected array");
  VecXd v(arr.size());
  for (int i = 0; i < static_cast<int>(arr.size()); ++i) v(i) = arr[i].get<double>();
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// Model documents
// ---------------------------------------------------------------------------

CharacterModeld load_model_string(const std::string& text) {
  const json doc = parse_json(text, "model");
  CharacterModeld model;
  if (doc.contains("gravity")) model.gravity = parse_vec3(doc["gravity"], "model.gravity");

  const json& links = require_field(doc, "links", "model");
  if (!links.is_array() || links.empty()) throw_usage("model: 'links' must be a non-empty array");
  std::map<std::string, int> by_name;
  for (const auto& jl : links) {
    LinkParams<double> link;
    link.name = require_field(jl, "name", "model.links").get<std::string>();
    if (by_name.count(link.name)) throw_usage("model: duplicate link name '" + link.name + "'");
    link.mass = require_field(jl, "mass", "link '" + link.name + "'").get<double>();
    const json& inertia = require_field(jl, "inertia", "link '" + link.name + "'");
    if (!inertia.is_array() || inertia.size() != 9) {
      throw_usage("link '" + link.name + "': inertia must hold 9 numbers (row-major)");
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) link.inertia(r, c) = inertia[3 * r + c].get<double>();
    }
    link.com_offset = parse_vec3(require_field(jl, "com", "link '" + link.name + "'"),
                                 "link '" + link.name + "'.com");
    by_name[link.name] = static_cast<int>(model.links.size());
    model.links.push_back(std::move(link));
  }

  if (doc.contains("joints")) {
    for (const auto& jj : doc["joints"]) {
      JointParams<double> joint;
      joint.name = require_field(jj, "name", "model.joints").get<std::string>();
      const std::string where = "joint '" + joint.name + "'";
      const std::string parent = require_field(jj, "parent", where).get<std::string>();
      const std::string child = require_field(jj, "child", where).get<std::string>();
      if (!by_name.count(parent)) throw_usage(where + ": unknown parent link '" + parent + "'");
      if (!by_name.count(child)) throw_usage(where + ": unknown child link '" + child + "'");
      joint.parent_link = by_name[parent];
      joint.child_link = by_name[child];
      joint.axis = parse_vec3(require_field(jj, "axis", where), where + ".axis");
      joint.origin_pos = parse_vec3(require_field(jj, "origin_pos", where), where + ".origin_pos");
      const json& q = require_field(jj, "origin_quat", where);
      if (!q.is_array() || q.size() != 4) throw_usage(where + ": origin_quat must hold w,x,y,z");
      joint.origin_quat =
          Quatd(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
      model.joints.push_back(std::move(joint));
    }
  }

  // Base link: the unique link that is nobody's child.
  std::vector<char> is_child(model.links.size(), 0);
  for (const auto& j : model.joints) is_child[j.child_link] = 1;
  int base = -1;
  for (int l = 0; l < model.n_links(); ++l) {
    if (!is_child[l]) {
      if (base >= 0) {
        throw_validation("model: multiple roots ('" + model.links[base].name + "' and '" +
                         model.links[l].name + "')");
      }
      base = l;
    }
  }
  if (base < 0) throw_validation("model: cycle detected (no root link)");
  model.base_link = base;
  model.finalize();
  return model;
}

std::string model_to_string(const CharacterModeld& model) {
  json doc;
  doc["gravity"] = vec_to_json(model.gravity);
  doc["links"] = json::array();
  for (const auto& l : model.links) {
    json jl;
    jl["name"] = l.name;
    jl["mass"] = l.mass;
    json inertia = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) inertia.push_back(l.inertia(r, c));
    jl["inertia"] = inertia;
    jl["com"] = vec_to_json(l.com_offset);
    doc["links"].push_back(jl);
  }
  doc["joints"] = json::array();
  for (const auto& j : model.joints) {
    json jj;
    jj["name"] = j.name;
    jj["parent"] = model.links[j.parent_link].name;
    jj["child"] = model.links[j.child_link].name;
    jj["axis"] = vec_to_json(j.axis);
    jj["origin_pos"] = vec_to_json(j.origin_pos);
    jj["origin_quat"] = {j.origin_quat.w(), j.origin_quat.x(), j.origin_quat.y(),
                         j.origin_quat.z()};
    doc["joints"].push_back(jj);
  }
  return doc.dump(2) + "\n";
}

CharacterModeld load_model_file(const std::string& path) {
  return load_model_string(read_file(path));
}

// ---------------------------------------------------------------------------
// Trajectory documents
// ---------------------------------------------------------------------------

ReferenceTrajectoryd load_trajectory_string(const std::string& text,
                                            const CharacterModeld& model) {
  const json doc = parse_json(text, "trajectory");
  ReferenceTrajectoryd traj;
  traj.dt = require_field(doc, "dt", "trajectory").get<double>();
  if (!(traj.dt > 0)) throw_usage("trajectory: dt must be > 0");

  const json& frames = require_field(doc, "frames", "trajectory");
  if (!frames.is_array()) throw_usage("trajectory: 'frames' must be an array");
  const int n = model.n_joints();
  const int width = 7 + n;
  int index = 0;
  for (const auto& jf : frames) {
    if (!jf.is_array() || static_cast<int>(jf.size()) != width) {
      throw_usage("trajectory: frame " + std::to_string(index) + " width " +
                  std::to_string(jf.size()) + " != expected " + std::to_string(width));
    }
    GeneralizedStated frame = GeneralizedStated::zero(n);
    frame.base_pos = Vec3d(jf[0].get<double>(), jf[1].get<double>(), jf[2].get<double>());
    Quatd q(jf[3].get<double>(), jf[4].get<double>(), jf[5].get<double>(), jf[6].get<double>());
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-6) {
      throw_usage("trajectory: frame " + std::to_string(index) +
                  " quaternion norm deviates beyond tolerance (" + format_double(norm) + ")");
    }
    q.normalize();
    frame.base_quat = q;
    for (int i = 0; i < n; ++i) frame.joint_pos(i) = jf[7 + i].get<double>();
    traj.frames.push_back(std::move(frame));
    ++index;
  }
  if (doc.contains("labels")) {
    const json& labels = doc["labels"];
    if (!labels.is_array() || labels.size() != traj.frames.size()) {
      throw_usage("trajectory: 'labels' must align with frames");
    }
    for (const auto& l : labels) traj.labels.push_back(l.get<std::string>());
  }
  return traj;
}

std::string trajectory_to_string(const ReferenceTrajectoryd& traj) {
  json doc;
  doc["dt"] = traj.dt;
  doc["frames"] = json::array();
  for (const auto& f : traj.frames) {
    json row = json::array();
    row.push_back(f.base_pos.x());
    row.push_back(f.base_pos.y());
    row.push_back(f.base_pos.z());
    row.push_back(f.base_quat.w());
    row.push_back(f.base_quat.x());
    row.push_back(f.base_quat.y());
    row.push_back(f.base_quat.z());
    for (int i = 0; i < f.joint_pos.size(); ++i) row.push_back(f.joint_pos(i));
    doc["frames"].push_back(row);
  }
  if (!traj.labels.empty()) doc["labels"] = traj.labels;
  return doc.dump() + "\n";
}

ReferenceTrajectoryd load_trajectory_file(const std::string& path,
                                          const CharacterModeld& model) {
  return load_trajectory_string(read_file(path), model);
}

// ---------------------------------------------------------------------------
// Perturbation schedules
// ---------------------------------------------------------------------------

std::string schedule_to_string(const PerturbationSchedule<double>& schedule) {
  json doc;
  doc["events"] = json::array();
  for (const auto& ev : schedule.events) {
    json je;
    je["start_step"] = ev.start_step;
    je["duration_steps"] = ev.duration_steps;
    je["force"] = vec_to_json(ev.force);
    je["torque"] = vec_to_json(ev.torque);
    je["target_link"] = ev.target_link;
    doc["events"].push_back(je);
  }
  return doc.dump(2) + "\n";
}

PerturbationSchedule<double> schedule_from_string(const std::string& text) {
  const json doc = parse_json(text, "schedule");
  PerturbationSchedule<double> schedule;
  for (const auto& je : require_field(doc, "events", "schedule")) {
    PerturbationEvent<double> ev;
    ev.start_step = require_field(je, "start_step", "event").get<int>();
    ev.duration_steps = require_field(je, "duration_steps", "event").get<int>();
    ev.force = parse_vec3(require_field(je, "force", "event"), "event.force");
    ev.torque = parse_vec3(require_field(je, "torque", "event"), "event.torque");
    ev.target_link = require_field(je, "target_link", "event").get<int>();
    schedule.events.push_back(ev);
  }
  return schedule;
}

// ---------------------------------------------------------------------------
// Files and formatting
// ---------------------------------------------------------------------------

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_usage("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_usage("cannot write file: " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// CSV emitters
// ---------------------------------------------------------------------------

namespace {

class CsvBuilder {
 public:
  CsvBuilder& cell(const std::string& s) {
    if (!first_) line_ << ',';
    line_ << s;
    first_ = false;
    return *this;
  }
  CsvBuilder& cell(double v) { return cell(format_double(v)); }
  CsvBuilder& cell(int v) { return cell(std::to_string(v)); }
  void end_row() {
    out_ << line_.str() << '\n';
    line_.str("");
    line_.clear();
    first_ = true;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::ostringstream line_;
  bool first_ = true;
};

}  // namespace

std::string impulse_profile_csv(const AnalysisResult<double>& analysis) {
  size_t max_contacts = 0;
  for (const auto& f : analysis.contact_forces) max_contacts = std::max(max_contacts, f.size());

  CsvBuilder csv;
  csv.cell("t");
  for (const char* c : {"Wx", "Wy", "Wz", "Wtx", "Wty", "Wtz"}) csv.cell(std::string(c));
  for (const char* c : {"Ix", "Iy", "Iz", "Itx", "Ity", "Itz"}) csv.cell(std::string(c));
  for (size_t i = 0; i < max_contacts; ++i) {
    csv.cell("c" + std::to_string(i) + "_fn");
    csv.cell("c" + std::to_string(i) + "_ft");
  }
  csv.cell("kkt_stationarity");
  csv.end_row();

  const auto& profile = analysis.profile;
  for (int t = 0; t < profile.n_frames(); ++t) {
    csv.cell(t * profile.dt);
    for (int i = 0; i < 6; ++i) csv.cell(profile.frames[t].wrench(i));
    for (int i = 0; i < 6; ++i) csv.cell(profile.frames[t].impulse(i));
    for (size_t i = 0; i < max_contacts; ++i) {
      if (i < analysis.contact_forces[t].size()) {
        const Vec3d& f = analysis.contact_forces[t][i];
        csv.cell(f.z());
        csv.cell(std::hypot(f.x(), f.y()));
      } else {
        csv.cell(0.0);
        csv.cell(0.0);
      }
    }
    csv.cell(analysis.solutions[t].kkt.stationarity);
    csv.end_row();
  }
  return csv.str();
}

ImpulseProfiled load_impulse_profile_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw_usage("impulse profile: empty CSV");

  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) header.push_back(col);
  }
  if (header.size() < 13 || header[0] != "t" || header[1] != "Wx" || header[7] != "Ix") {
    throw_usage("impulse profile: unexpected CSV header");
  }

  ImpulseProfiled profile;
  std::vector<double> times;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ls, cell, ',')) values.push_back(std::stod(cell));
    if (values.size() < 13) throw_usage("impulse profile: short CSV row");
    times.push_back(values[0]);
    ImpulseProfiled::Entry entry;
    for (int i = 0; i < 6; ++i) entry.wrench(i) = values[1 + i];
    for (int i = 0; i < 6; ++i) entry.impulse(i) = values[7 + i];
    profile.frames.push_back(entry);
  }
  if (times.size() < 2) throw_usage("impulse profile: need at least 2 rows");
  profile.dt = times[1] - times[0];
  if (!(profile.dt > 0)) throw_usage("impulse profile: non-increasing time column");
  return profile;
}

std::string telemetry_csv(const RolloutResult<double>& rollout) {
  CsvBuilder csv;
  for (const char* c : {"t", "root_error", "cum_mean_body_error", "Wx", "Wy", "Wz", "Wtx",
                        "Wty", "Wtz", "contact_fx", "contact_fy", "contact_fz", "terminated"}) {
    csv.cell(std::string(c));
  }
  csv.end_row();
  for (const auto& row : rollout.telemetry) {
    csv.cell(row.t);
    csv.cell(row.root_error);
    csv.cell(row.cum_mean_body_error);
    for (int i = 0; i < 6; ++i) csv.cell(row.wrench(i));
    for (int i = 0; i < 3; ++i) csv.cell(row.contact_force_sum(i));
    csv.cell(row.terminated ? 1 : 0);
    csv.end_row();
  }
  return csv.str();
}

std::string curves_csv(const std::vector<CurveRow>& rows) {
  CsvBuilder csv;
  for (const char* c :
       {"iteration", "success_rate", "mean_body_pos_error", "ppo_loss", "value_loss",
        "compass_loss", "sparsity_loss", "mean_beta_lin", "mean_beta_ang", "mean_m"}) {
    csv.cell(std::string(c));
  }
  csv.end_row();
  for (const auto& r : rows) {
    csv.cell(r.iteration);
    csv.cell(r.success_rate);
    csv.cell(r.mean_body_pos_error);
    csv.cell(r.ppo_loss);
    csv.cell(r.value_loss);
    csv.cell(r.compass_loss);
    csv.cell(r.sparsity_loss);
    csv.cell(r.mean_beta_lin);
    csv.cell(r.mean_beta_ang);
    csv.cell(r.mean_m);
    csv.end_row();
  }
  return csv.str();
}

std::string eval_report_csv(const EvalReport& report, bool has_split) {
  CsvBuilder csv;
  for (const char* c : {"pos_mean", "pos_std", "vel_mean", "vel_std", "total_lin", "total_ang",
                        "ref_lin", "ref_ang", "res_lin", "res_ang", "jitter", "success_rate",
                        "episodes", "beta_lin_mean", "beta_ang_mean"}) {
    csv.cell(std::string(c));
  }
  csv.end_row();
  csv.cell(report.e_pose.mean);
  csv.cell(report.e_pose.std);
  csv.cell(report.e_vel.mean);
  csv.cell(report.e_vel.std);
  csv.cell(report.impulse.total_lin);
  csv.cell(report.impulse.total_ang);
  if (has_split) {
    csv.cell(report.impulse.ref_lin);
    csv.cell(report.impulse.ref_ang);
    csv.cell(report.impulse.res_lin);
    csv.cell(report.impulse.res_ang);
  } else {
    for (int i = 0; i < 4; ++i) csv.cell(std::string("N/A"));
  }
  csv.cell(report.jitter_value);
  csv.cell(report.success_rate);
  csv.cell(report.episodes);
  csv.cell(report.gates.beta_lin_mean);
  csv.cell(report.gates.beta_ang_mean);
  csv.end_row();
  return csv.str();
}

std::string eval_report_json(const EvalReport& report, bool has_split) {
  json doc;
  doc["e_pose"] = {{"mean", report.e_pose.mean}, {"std", report.e_pose.std}};
  doc["e_vel"] = {{"mean", report.e_vel.mean}, {"std", report.e_vel.std}};
  json imp;
  imp["total_lin"] = report.impulse.total_lin;
  imp["total_ang"] = report.impulse.total_ang;
  if (has_split) {
    imp["ref_lin"] = report.impulse.ref_lin;
    imp["ref_ang"] = report.impulse.ref_ang;
    imp["res_lin"] = report.impulse.res_lin;
    imp["res_ang"] = report.impulse.res_ang;
  }
  doc["impulse"] = imp;
  doc["jitter"] = report.jitter_value;
  doc["success_rate"] = report.success_rate;
  doc["episodes"] = report.episodes;
  doc["termination_steps"] = report.termination_steps;
  doc["gates"] = {{"beta_lin_mean", report.gates.beta_lin_mean},
                  {"beta_lin_min", report.gates.beta_lin_min},
                  {"beta_lin_max", report.gates.beta_lin_max},
                  {"beta_ang_mean", report.gates.beta_ang_mean},
                  {"beta_ang_min", report.gates.beta_ang_min},
                  {"beta_ang_max", report.gates.beta_ang_max}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

json mlp_to_json(const Mlp<double>& mlp) {
  json doc;
  doc["weights"] = json::array();
  doc["biases"] = json::array();
  for (size_t i = 0; i < mlp.weights.size(); ++i) {
    doc["weights"].push_back(mat_to_json(mlp.weights[i]));
    doc["biases"].push_back(vec_to_json(mlp.biases[i]));
  }
  return doc;
}

Mlp<double> mlp_from_json(const json& doc, const std::string& where) {
  Mlp<double> mlp;
  const json& ws = require_field(doc, "weights", where);
  const json& bs = require_field(doc, "biases", where);
  if (ws.size() != bs.size()) throw_usage(where + ": weight/bias layer mismatch");
  for (size_t i = 0; i < ws.size(); ++i) {
    mlp.weights.push_back(mat_from_json(ws[i], where));
    mlp.biases.push_back(vec_from_json(bs[i], where));
  }
  return mlp;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json doc;
  doc["format"] = "impulsekit-checkpoint";
  doc["version"] = 1;
  doc["obs_spec"] = {{"n_joints", ckpt.spec.n_joints},
                     {"n_links", ckpt.spec.n_links},
                     {"history_len", ckpt.spec.history_len}};
  doc["obs_hash"] = std::to_string(ckpt.spec.hash());
  doc["sigma_lin"] = ckpt.policy.sigma_lin;
  doc["sigma_ang"] = ckpt.policy.sigma_ang;
  doc["naive_mode"] = ckpt.policy.naive_mode;
  doc["n_joints"] = ckpt.policy.n_joints;
  doc["policy"] = {{"trunk", mlp_to_json(ckpt.policy.trunk)},
                   {"w_kin", mat_to_json(ckpt.policy.w_kin)},
                   {"b_kin", vec_to_json(ckpt.policy.b_kin)},
                   {"w_res", mat_to_json(ckpt.policy.w_res)},
                   {"b_res", vec_to_json(ckpt.policy.b_res)},
                   {"log_std_kin", vec_to_json(ckpt.policy.log_std_kin)},
                   {"log_std_res", vec_to_json(ckpt.policy.log_std_res)}};
  doc["critic"] = {{"trunk", mlp_to_json(ckpt.critic.trunk)},
                   {"w_value", mat_to_json(ckpt.critic.w_value)},
                   {"b_value", vec_to_json(ckpt.critic.b_value)}};
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  const json doc = parse_json(text, "checkpoint");
  if (require_field(doc, "format", "checkpoint").get<std::string>() != "impulsekit-checkpoint") {
    throw_usage("checkpoint: unrecognized container format");
  }
  Checkpoint ckpt;
  const json& spec = require_field(doc, "obs_spec", "checkpoint");
  ckpt.spec.n_joints = require_field(spec, "n_joints", "obs_spec").get<int>();
  ckpt.spec.n_links = require_field(spec, "n_links", "obs_spec").get<int>();
  ckpt.spec.history_len = require_field(spec, "history_len", "obs_spec").get<int>();
  if (require_field(doc, "obs_hash", "checkpoint").get<std::string>() !=
      std::to_string(ckpt.spec.hash())) {
    throw_usage("checkpoint: observation spec hash mismatch");
  }
  ckpt.policy.sigma_lin = require_field(doc, "sigma_lin", "checkpoint").get<double>();
  ckpt.policy.sigma_ang = require_field(doc, "sigma_ang", "checkpoint").get<double>();
  ckpt.policy.naive_mode = require_field(doc, "naive_mode", "checkpoint").get<bool>();
  ckpt.policy.n_joints = require_field(doc, "n_joints", "checkpoint").get<int>();
  const json& pol = require_field(doc, "policy", "checkpoint");
  ckpt.policy.trunk = mlp_from_json(require_field(pol, "trunk", "policy"), "policy.trunk");
  ckpt.policy.w_kin = mat_from_json(require_field(pol, "w_kin", "policy"), "policy.w_kin");
  ckpt.policy.b_kin = vec_from_json(require_field(pol, "b_kin", "policy"), "policy.b_kin");
  ckpt.policy.w_res = mat_from_json(require_field(pol, "w_res", "policy"), "policy.w_res");
  ckpt.policy.b_res = vec_from_json(require_field(pol, "b_res", "policy"), "policy.b_res");
  ckpt.policy.log_std_kin =
      vec_from_json(require_field(pol, "log_std_kin", "policy"), "policy.log_std_kin");
  ckpt.policy.log_std_res =
      vec_from_json(require_field(pol, "log_std_res", "policy"), "policy.log_std_res");
  const json& cri = require_field(doc, "critic", "checkpoint");
  ckpt.critic.trunk = mlp_from_json(require_field(cri, "trunk", "critic"), "critic.trunk");
  ckpt.critic.w_value = mat_from_json(require_field(cri, "w_value", "critic"), "critic.w_value");
  ckpt.critic.b_value = vec_from_json(require_field(cri, "b_value", "critic"), "critic.b_value");
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  write_file_atomic(path, checkpoint_to_string(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_string(read_file(path));
}

}  // namespace impulsekit
