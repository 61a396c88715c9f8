// Copyright 2026 the expmem authors
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

#include "expmem/world.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "expmem/error.hpp"
#include "expmem/store_io.hpp"

namespace expmem {

std::optional<std::size_t> AppWorld::find_screen(const std::string& id) const {
  for (std::size_t i = 0; i < screens.size(); ++i) {
    if (screens[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> AppWorld::action_counts() const {
  std::vector<std::size_t> out;
  out.reserve(screens.size());
  for (const auto& s : screens) out.push_back(s.actions.size());
  return out;
}

std::vector<std::string> AppWorld::screen_ids() const {
  std::vector<std::string> out;
  out.reserve(screens.size());
  for (const auto& s : screens) out.push_back(s.id);
  return out;
}

const SimTask& SimWorld::task(const std::string& id) const {
  for (const auto& t : tasks) {
    if (t.id() == id) return t;
  }
  throw InvalidArgument("unknown task '" + id + "'");
}

namespace {

struct LibSubtask {
  std::string slug;
  std::string label;
  std::vector<std::string> edges;  // action label templates
  std::string phrase;              // instruction fragment
  std::string state;               // essential-state text fired by the last edge
};

struct LibApp {
  std::string package;
  std::string app;
  std::string slug;
  std::vector<LibSubtask> subtasks;
};

const std::vector<LibApp>& library() {
  static const std::vector<LibApp> apps = {
      {"com.sim.files",
       "Files",
       "files",
       {
           {"open", "Open file", {"Browse", "Open {{file_name}}"}, "open {{file_name}}",
            "File {{file_name}} is opened"},
           {"rename", "Rename file", {"More options", "Rename", "Confirm name {{new_name}}"},
            "rename it to {{new_name}}", "File renamed to {{new_name}}"},
           {"move", "Move file", {"Move to", "Choose folder {{folder}}", "Move here"},
            "move it into {{folder}}", "File relocated into {{folder}}"},
           {"share", "Share item", {"Share", "Pick contact {{contact}}"},
            "share it with {{contact}}", "Item delivered to {{contact}}"},
           {"star", "Star file", {"Details", "Add star"}, "star it", "File flagged as starred"},
       }},
      {"com.sim.mail",
       "Mail",
       "mail",
       {
           {"inbox", "Open inbox", {"Mailboxes", "Inbox"}, "open the inbox",
            "Inbox listing displayed"},
           {"compose", "Compose message", {"Compose", "To field {{contact}}", "Subject {{subject}}"},
            "write to {{contact}} about {{subject}}", "Draft for {{contact}} titled {{subject}} prepared"},
           {"attach", "Attach file", {"Attach", "Pick attachment {{file_name}}"},
            "attach {{file_name}}", "Attachment {{file_name}} included"},
           {"send", "Send message", {"Send", "Confirm send"}, "send it", "Message dispatched"},
           {"search", "Search mail", {"Search mail", "Query {{subject}}", "Show results"},
            "search for {{subject}}", "Matches for {{subject}} listed"},
       }},
      {"com.sim.notes",
       "Notes",
       "notes",
       {
           {"create", "Create note", {"New note", "Title {{title}}"},
            "create a note titled {{title}}", "Note {{title}} created"},
           {"checklist", "Add checklist", {"Format", "Checklist", "Add item {{item}}"},
            "add the item {{item}}", "Checklist entry {{item}} appended"},
           {"pin", "Pin note", {"Note menu", "Pin"}, "pin it", "Note pinned at top"},
           {"remind", "Set reminder", {"Remind me", "Time {{time}}", "Save reminder"},
            "set a reminder at {{time}}", "Reminder scheduled for {{time}}"},
           {"share", "Share item", {"Send note", "Recipient {{contact}}"},
            "share it with {{contact}}", "Item delivered to {{contact}}"},
       }},
  };
  return apps;
}

const std::map<std::string, std::vector<std::string>>& value_pools() {
  static const std::map<std::string, std::vector<std::string>> pools = {
      {"file_name", {"report_17.txt", "budget_q3.xlsx", "notes_0412.md", "photo_2291.jpg"}},
      {"new_name", {"final_17.txt", "summary_88.txt", "draft_5120.md"}},
      {"folder", {"Archive2024", "ProjectsX7", "Inbox42"}},
      {"contact", {"Alice_Wong", "Bob_Ito", "Carla_Diaz"}},
      {"subject", {"Q3_review", "offsite_plan", "invoice_771"}},
      {"title", {"Trip_plan_5", "Reading_list_9", "Groceries_31"}},
      {"item", {"buy_milk_2", "call_dentist_4", "pay_rent_6"}},
      {"time", {"07h45", "12h30", "18h15"}},
  };
  return pools;
}

const std::vector<std::string>& distractor_vocabulary() {
  static const std::vector<std::string> words = {
      "Settings", "Help",  "Back",  "Search",  "Menu",  "Sort",  "Filter", "About", "Feedback",
      "Trash",    "Print", "Close", "Refresh", "Zoom",  "Sync",  "Account", "Theme", "Tips"};
  return words;
}

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 rng_;
};

// Task description ready to be laid out as screens.
struct TaskSpec {
  std::string task_id;
  std::string package;
  std::string app;
  std::string content;
  std::map<std::string, std::string> fixed;
  VariableBindings bindings;
  std::vector<SubtaskTemplate> subtasks;
  std::vector<EssentialStateTemplate> states;
  std::vector<std::vector<std::string>> edges;  // instantiated labels per subtask
};

std::vector<std::string> ordered_placeholders(const std::vector<std::string>& texts) {
  std::vector<std::string> out;
  for (const auto& t : texts) {
    for (const auto& n : placeholder_names(t)) {
      if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
    }
  }
  return out;
}

// Lays out a chain of screens with dead-end distractors and registers the
// task. `distractors(k)` gives the distractor labels for chain screen k.
template <typename DistractorFn>
SimTask lay_out(AppWorld& world, const TaskSpec& spec, int horizon, Draw& draw,
                DistractorFn distractors) {
  std::vector<std::string> path_labels;
  for (const auto& seg : spec.edges) path_labels.insert(path_labels.end(), seg.begin(), seg.end());
  const std::size_t length = path_labels.size();

  std::vector<std::size_t> chain;
  for (std::size_t k = 0; k <= length; ++k) {
    Screen s;
    s.id = spec.task_id + "/s" + std::to_string(k);
    s.title = k == 0 ? spec.app + " home" : spec.app + ": " + path_labels[k - 1];
    chain.push_back(world.screens.size());
    world.screens.push_back(std::move(s));
  }

  std::vector<PathEdge> path;
  for (std::size_t k = 0; k < length; ++k) {
    std::vector<Action> actions;
    actions.push_back({path_labels[k], chain[k + 1]});
    const std::vector<std::string> wrong = distractors(k);
    for (std::size_t j = 0; j < wrong.size(); ++j) {
      Screen dead;
      dead.id = spec.task_id + "/s" + std::to_string(k) + "/x" + std::to_string(j);
      dead.title = spec.app + ": " + wrong[j];
      actions.push_back({wrong[j], world.screens.size()});
      world.screens.push_back(std::move(dead));
    }
    draw.shuffle(actions);
    std::size_t expert = 0;
    while (actions[expert].label != path_labels[k]) ++expert;
    world.screens[chain[k]].actions = std::move(actions);
    path.push_back({chain[k], expert});
  }
  world.expert_paths[spec.task_id] = path;

  SimTask task;
  task.task_template.task_id = spec.task_id;
  task.task_template.package_names = {spec.package};
  task.task_template.content = spec.content;
  task.task_template.fixed_parameters = spec.fixed;
  std::vector<std::string> texts = {spec.content};
  for (const auto& st : spec.states) texts.push_back(st.content);
  for (const auto& sub : spec.subtasks) texts.push_back(sub.content);
  for (const auto& name : ordered_placeholders(texts)) {
    if (!spec.fixed.count(name)) task.task_template.variable_parameters.push_back(name);
  }
  task.task_template.essential_states = spec.states;
  task.task_template.subtasks = spec.subtasks;
  task.bindings = spec.bindings;
  task.start_screen = chain[0];
  task.horizon = horizon;

  std::size_t begin = 0;
  for (std::size_t j = 0; j < spec.edges.size(); ++j) {
    const std::size_t end = begin + spec.edges[j].size();
    task.segments.push_back({spec.subtasks[j].subtask_id, begin, end});
    if (j < spec.states.size()) {
      task.predicates.push_back({spec.states[j].state_id, chain[end - 1], path_labels[end - 1]});
    }
    begin = end;
  }
  task.task_template.validate();
  return task;
}

std::optional<TaskSpec> draw_spec(Draw& draw, std::set<std::string>& used_ids) {
  const auto& apps = library();
  const LibApp& app = apps[draw.below(apps.size())];
  const std::size_t n_sub = 3 + draw.below(2);
  std::vector<std::size_t> idx(app.subtasks.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  draw.shuffle(idx);
  idx.resize(n_sub);
  std::sort(idx.begin(), idx.end());

  std::size_t length = 0;
  for (std::size_t i : idx) length += app.subtasks[i].edges.size();
  if (length < 6 || length > 10) return std::nullopt;

  TaskSpec spec;
  spec.task_id = app.slug;
  for (std::size_t i : idx) spec.task_id += "_" + app.subtasks[i].slug;
  if (used_ids.count(spec.task_id)) return std::nullopt;

  spec.package = app.package;
  spec.app = app.app;
  spec.fixed = {{"app_name", app.app}};
  spec.content = "In {{app_name}}, ";
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const LibSubtask& sub = app.subtasks[idx[j]];
    if (j) spec.content += ", then ";
    spec.content += sub.phrase;
    for (const auto& name : placeholder_names(sub.phrase)) {
      if (spec.bindings.count(name)) continue;
      const auto& pool = value_pools().at(name);
      spec.bindings[name] = pool[draw.below(pool.size())];
    }
    const std::string k = std::to_string(j + 1);
    spec.subtasks.push_back({"T" + k, sub.label, "Tap '" + sub.edges.front() + "' to " + sub.phrase + "."});
    spec.states.push_back({"S" + k, sub.state, {}});
    std::vector<std::string> labels;
    for (const auto& e : sub.edges) labels.push_back(instantiate_template(e, spec.bindings));
    spec.edges.push_back(std::move(labels));
  }
  spec.content += ".";
  used_ids.insert(spec.task_id);
  return spec;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

SimWorld build_world(std::uint64_t seed, int n_tasks) {
  if (n_tasks < 1) throw InvalidArgument("build_world: n_tasks must be >= 1");
  SimWorld best;
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    Draw draw(mix_seed(seed, attempt));
    std::set<std::string> used;
    std::vector<TaskSpec> specs;
    int misses = 0;
    while (static_cast<int>(specs.size()) < n_tasks) {
      auto spec = draw_spec(draw, used);
      if (spec) {
        specs.push_back(std::move(*spec));
        misses = 0;
      } else if (++misses > 2000) {
        throw InvalidArgument("build_world: the task library cannot supply " +
                              std::to_string(n_tasks) + " distinct tasks");
      }
    }
    SimWorld world;
    const auto& vocab = distractor_vocabulary();
    for (const auto& spec : specs) {
      world.tasks.push_back(lay_out(world.app, spec, kDefaultHorizon, draw, [&](std::size_t) {
        std::vector<std::string> words = vocab;
        draw.shuffle(words);
        words.resize(2 + draw.below(3));
        return words;
      }));
    }
    validate_world(world);
    if (n_tasks < 3 || shared_label_pairs(world) >= 2) return world;
    if (attempt == 0) best = std::move(world);
  }
  return best;
}

SimWorld make_chain_world(int path_length, int branching, int n_subtasks, int horizon) {
  if (path_length < 1 || branching < 1 || n_subtasks < 1 || n_subtasks > path_length ||
      horizon < 0) {
    throw InvalidArgument("make_chain_world: invalid shape");
  }
  TaskSpec spec;
  spec.task_id = "chain";
  spec.package = "com.sim.chain";
  spec.app = "Chain";
  spec.fixed = {{"app_name", "Chain"}};
  spec.content = "In {{app_name}}, walk every step of the chain.";
  for (int j = 0; j < n_subtasks; ++j) {
    const int begin = j * path_length / n_subtasks;
    const int end = (j + 1) * path_length / n_subtasks;
    const std::string k = std::to_string(j + 1);
    std::vector<std::string> labels;
    for (int i = begin; i < end; ++i) labels.push_back("Step " + std::to_string(i + 1));
    spec.subtasks.push_back({"T" + k, "Chain part " + k, "Tap '" + labels.front() + "' to begin part " + k + "."});
    spec.states.push_back({"S" + k, "Chain segment " + k + " reached", {}});
    spec.edges.push_back(std::move(labels));
  }
  SimWorld world;
  Draw draw(mix_seed(static_cast<std::uint64_t>(path_length), branching));
  world.tasks.push_back(lay_out(world.app, spec, horizon, draw, [&](std::size_t k) {
    std::vector<std::string> words;
    for (int j = 1; j < branching; ++j) {
      words.push_back("Detour " + std::to_string(k + 1) + "." + std::to_string(j));
    }
    return words;
  }));
  return world;
}

void validate_world(const SimWorld& world) {
  const auto& screens = world.app.screens;
  for (const auto& s : screens) {
    std::set<std::string> labels;
    for (const auto& a : s.actions) {
      if (a.target >= screens.size()) {
        throw InvalidArgument("screen '" + s.id + "' has an action to a missing screen");
      }
      if (!labels.insert(a.label).second) {
        throw InvalidArgument("screen '" + s.id + "' repeats action label '" + a.label + "'");
      }
    }
  }
  std::set<std::string> ids;
  for (const auto& task : world.tasks) {
    if (!ids.insert(task.id()).second) throw InvalidArgument("duplicate task id '" + task.id() + "'");
    task.task_template.validate();
    auto it = world.app.expert_paths.find(task.id());
    if (it == world.app.expert_paths.end() || it->second.empty()) {
      throw InvalidArgument("task '" + task.id() + "' has no expert path");
    }
    const auto& path = it->second;
    if (task.start_screen >= screens.size() || path.front().screen != task.start_screen) {
      throw InvalidArgument("task '" + task.id() + "' expert path does not leave the start screen");
    }
    std::size_t next_pred = 0;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const PathEdge& e = path[i];
      if (e.screen >= screens.size() || e.action >= screens[e.screen].actions.size()) {
        throw InvalidArgument("task '" + task.id() + "' expert edge " + std::to_string(i) +
                              " does not exist");
      }
      const Action& a = screens[e.screen].actions[e.action];
      if (i + 1 < path.size() && a.target != path[i + 1].screen) {
        throw InvalidArgument("task '" + task.id() + "' expert path breaks after edge " +
                              std::to_string(i));
      }
      if (next_pred < task.predicates.size() && task.predicates[next_pred].screen == e.screen &&
          task.predicates[next_pred].label == a.label) {
        ++next_pred;
      }
    }
    if (task.predicates.size() != task.task_template.essential_states.size()) {
      throw InvalidArgument("task '" + task.id() + "' needs one predicate per essential state");
    }
    for (std::size_t k = 0; k < task.predicates.size(); ++k) {
      if (task.predicates[k].state_id != task.task_template.essential_states[k].state_id) {
        throw InvalidArgument("task '" + task.id() + "' predicates are not in state order");
      }
    }
    if (next_pred != task.predicates.size()) {
      throw InvalidArgument("task '" + task.id() + "' predicates do not fire in order along the expert path");
    }
    if (task.segments.size() != task.task_template.subtasks.size()) {
      throw InvalidArgument("task '" + task.id() + "' needs one segment per subtask");
    }
    std::size_t cursor = 0;
    for (std::size_t j = 0; j < task.segments.size(); ++j) {
      const auto& seg = task.segments[j];
      if (seg.subtask_id != task.task_template.subtasks[j].subtask_id || seg.begin != cursor ||
          seg.end <= seg.begin) {
        throw InvalidArgument("task '" + task.id() + "' segments do not tile the expert path");
      }
      cursor = seg.end;
    }
    if (cursor != path.size()) {
      throw InvalidArgument("task '" + task.id() + "' segments do not tile the expert path");
    }
    if (task.horizon < 0 || static_cast<std::size_t>(task.horizon) < path.size()) {
      throw InvalidArgument("task '" + task.id() + "' horizon is shorter than its expert path");
    }
  }
}

std::optional<std::string> expert_label(const SimWorld& world, const std::string& task_id,
                                        const std::string& screen_id) {
  auto it = world.app.expert_paths.find(task_id);
  if (it == world.app.expert_paths.end()) return std::nullopt;
  for (const auto& e : it->second) {
    const Screen& s = world.app.screens[e.screen];
    if (s.id == screen_id) return s.actions[e.action].label;
  }
  return std::nullopt;
}

int shared_label_pairs(const SimWorld& world) {
  std::vector<std::set<SkillKey>> keys;
  for (const auto& t : world.tasks) {
    std::set<SkillKey> k;
    for (const auto& s : t.task_template.subtasks) k.insert({t.task_template.primary_package(), s.label});
    keys.push_back(std::move(k));
  }
  int pairs = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = i + 1; j < keys.size(); ++j) {
      for (const auto& k : keys[i]) {
        if (keys[j].count(k)) {
          ++pairs;
          break;
        }
      }
    }
  }
  return pairs;
}

nlohmann::json world_to_json(const SimWorld& world) {
  using nlohmann::json;
  const auto& screens = world.app.screens;
  json js = json::array();
  for (const auto& s : screens) {
    json actions = json::array();
    for (const auto& a : s.actions) actions.push_back({{"label", a.label}, {"target", screens[a.target].id}});
    js.push_back({{"id", s.id}, {"title", s.title}, {"actions", std::move(actions)}});
  }
  json jt = json::array();
  for (const auto& t : world.tasks) {
    json path = json::array();
    for (const auto& e : world.app.expert_paths.at(t.id())) {
      path.push_back(screens[e.screen].actions[e.action].label);
    }
    json preds = json::array();
    for (const auto& p : t.predicates) {
      preds.push_back({{"state_id", p.state_id}, {"screen", screens[p.screen].id}, {"label", p.label}});
    }
    json segs = json::array();
    for (const auto& s : t.segments) {
      segs.push_back({{"subtask_id", s.subtask_id}, {"begin", s.begin}, {"end", s.end}});
    }
    jt.push_back({{"template", task_template_to_json(t.task_template)},
                  {"bindings", t.bindings},
                  {"start_screen", screens[t.start_screen].id},
                  {"horizon", t.horizon},
                  {"expert_path", std::move(path)},
                  {"predicates", std::move(preds)},
                  {"segments", std::move(segs)}});
  }
  return {{"format_version", 1}, {"screens", std::move(js)}, {"tasks", std::move(jt)}};
}

SimWorld world_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format_version").get<int>() != 1) throw IoFailure("unsupported world version");
    SimWorld world;
    std::map<std::string, std::size_t> index;
    for (const auto& s : j.at("screens")) {
      const std::string id = s.at("id").get<std::string>();
      if (!index.emplace(id, world.app.screens.size()).second) {
        throw IoFailure("duplicate screen id '" + id + "'");
      }
      world.app.screens.push_back({id, s.at("title").get<std::string>(), {}});
    }
    auto screen_of = [&](const std::string& id) {
      auto it = index.find(id);
      if (it == index.end()) throw IoFailure("unknown screen id '" + id + "'");
      return it->second;
    };
    std::size_t i = 0;
    for (const auto& s : j.at("screens")) {
      for (const auto& a : s.at("actions")) {
        world.app.screens[i].actions.push_back(
            {a.at("label").get<std::string>(), screen_of(a.at("target").get<std::string>())});
      }
      ++i;
    }
    for (const auto& jt : j.at("tasks")) {
      SimTask t;
      t.task_template = task_template_from_json(jt.at("template"));
      t.bindings = jt.at("bindings").get<VariableBindings>();
      t.start_screen = screen_of(jt.at("start_screen").get<std::string>());
      t.horizon = jt.at("horizon").get<int>();
      for (const auto& p : jt.at("predicates")) {
        t.predicates.push_back({p.at("state_id").get<std::string>(),
                                screen_of(p.at("screen").get<std::string>()),
                                p.at("label").get<std::string>()});
      }
      for (const auto& s : jt.at("segments")) {
        t.segments.push_back({s.at("subtask_id").get<std::string>(), s.at("begin").get<std::size_t>(),
                              s.at("end").get<std::size_t>()});
      }
      std::vector<PathEdge> path;
      std::size_t at = t.start_screen;
      for (const auto& label : jt.at("expert_path")) {
        const auto& actions = world.app.screens[at].actions;
        std::size_t a = 0;
        while (a < actions.size() && actions[a].label != label.get<std::string>()) ++a;
        if (a == actions.size()) throw IoFailure("expert path label '" + label.get<std::string>() + "' not found");
        path.push_back({at, a});
        at = actions[a].target;
      }
      world.app.expert_paths[t.id()] = std::move(path);
      world.tasks.push_back(std::move(t));
    }
    validate_world(world);
    return world;
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure(std::string("malformed world document: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw IoFailure(std::string("invalid world: ") + e.what());
  }
}

void save_world(const SimWorld& world, const std::filesystem::path& path) {
  write_text_file(path, world_to_json(world).dump(2) + "\n");
}

SimWorld load_world(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoFailure("cannot parse world file " + path.string() + ": " + e.what());
  }
  return world_from_json(j);
}

}  // namespace expmem
