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

// Protocol-compatible stand-in for the rendering worker. It never executes the
// code it receives; instead it reads directives embedded in the source:
//
//   # stub: sleep <s>        sleep; reports timeout itself once s >= timeout_s
//   # stub: hang             block forever (the broker must kill us)
//   # stub: crash            exit immediately without answering
//   # stub: fail [message]   exec_error with message on stderr
//   # stub: exit <code>      exec_error as if the script exited with <code>
//   # stub: label <text>     render: embed <text> as a PNG tEXt chunk "label"
//   # stub: color <r> <g> <b>   render: fill colour (default derived from code hash)
//   # stub: size <w> <h>     render: image size (default 64x48)
//   # stub: sentinel         drop a sentinel file in the task dir and report
//                            whether any foreign file is visible ("clean"/"contaminated")
//   # stub: stderr <text>    append a line to stderr
//   print(<literal or text>) one stdout line; quotes around a literal are stripped
//   raise ...                exec_error with a traceback-like stderr
//
// Render tasks must mention image.png, mirroring the real artifact contract.
#include <unistd.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "broker/protocol.hpp"
#include "common/digest.hpp"
#include "common/error.hpp"
#include "common/png.hpp"
#include "common/text.hpp"

namespace fs = std::filesystem;
using namespace chartforge;
using namespace chartforge::broker;

namespace {

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "cf-stub-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) fail(ErrorCode::kIo, "mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string print_argument(std::string_view line) {
  auto open = line.find('(');
  auto close = line.rfind(')');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return "";
  std::string_view arg = text::trim(line.substr(open + 1, close - open - 1));
  if (arg.size() >= 2 && (arg.front() == '"' || arg.front() == '\'') && arg.back() == arg.front()) {
    arg = arg.substr(1, arg.size() - 2);
  }
  return std::string(arg);
}

WorkerResponse run_task(const ExecutionTask& task) {
  const auto started = std::chrono::steady_clock::now();
  WorkerResponse r;
  r.task_id = task.task_id;
  TempDir dir;

  std::string label;
  std::string digest = sha256_hex(task.code);
  int rgb[3] = {std::stoi(digest.substr(0, 2), nullptr, 16), std::stoi(digest.substr(2, 2), nullptr, 16),
                std::stoi(digest.substr(4, 2), nullptr, 16)};
  std::uint32_t width = 64, height = 48;

  auto finish = [&](ExecStatus status) {
    r.status = status;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return r;
  };

  std::istringstream lines(task.code);
  std::string raw;
  while (std::getline(lines, raw)) {
    std::string_view line = text::trim(raw);
    if (line.rfind("# stub:", 0) == 0) {
      std::istringstream args{std::string(text::trim(line.substr(7)))};
      std::string verb;
      args >> verb;
      std::string rest;
      std::getline(args, rest);
      rest = std::string(text::trim(rest));
      if (verb == "sleep") {
        double s = std::atof(rest.c_str());
        if (s >= task.timeout_s) {
          std::this_thread::sleep_for(std::chrono::duration<double>(task.timeout_s));
          r.stderr_text += "timed out after " + std::to_string(task.timeout_s) + " s\n";
          return finish(ExecStatus::kTimeout);
        }
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
      } else if (verb == "hang") {
        for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
      } else if (verb == "crash") {
        std::_Exit(3);
      } else if (verb == "fail") {
        r.stderr_text += (rest.empty() ? "stub failure" : rest) + "\n";
        return finish(ExecStatus::kExecError);
      } else if (verb == "exit") {
        int code = std::atoi(rest.c_str());
        if (code != 0) {
          r.stderr_text += "process exited with status " + std::to_string(code) + "\n";
          return finish(ExecStatus::kExecError);
        }
      } else if (verb == "label") {
        label = rest;
      } else if (verb == "color") {
        std::istringstream c(rest);
        c >> rgb[0] >> rgb[1] >> rgb[2];
      } else if (verb == "size") {
        std::istringstream c(rest);
        c >> width >> height;
      } else if (verb == "sentinel") {
        const std::string mine = "sentinel-" + task.task_id;
        std::ofstream(dir.path() / mine) << task.task_id;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
        int foreign = 0;
        for (const auto& entry : fs::directory_iterator(dir.path())) {
          if (entry.path().filename() != mine) ++foreign;
        }
        r.stdout_text += foreign == 0 ? "clean\n" : "contaminated\n";
      } else if (verb == "stderr") {
        r.stderr_text += rest + "\n";
      }
    } else if (line.rfind("print(", 0) == 0) {
      r.stdout_text += print_argument(line) + "\n";
    } else if (line.rfind("raise", 0) == 0) {
      r.stderr_text += "Traceback (most recent call last):\n  " + std::string(line) + "\n";
      return finish(ExecStatus::kExecError);
    }
  }

  if (task.kind == TaskKind::kRender) {
    if (task.code.find("image.png") == std::string::npos) {
      r.stderr_text += "image.png was not produced\n";
      return finish(ExecStatus::kExecError);
    }
    RgbImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(std::size_t(width) * height * 3);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = std::uint8_t(rgb[i % 3]);
    std::map<std::string, std::string> chunks;
    if (!label.empty()) chunks["label"] = label;
    Bytes png = encode_png(img, chunks);
    const fs::path out = dir.path() / "image.png";
    std::ofstream(out, std::ios::binary).write(reinterpret_cast<const char*>(png.data()), std::streamsize(png.size()));
    std::ifstream in(out, std::ios::binary);
    Bytes back((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    r.artifact_b64 = base64_encode(back);
  }
  return finish(ExecStatus::kOk);
}

}  // namespace

int main() {
  std::ios::sync_with_stdio(false);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (text::trim(line).empty()) continue;
    WorkerResponse r;
    try {
      r = run_task(decode_request(line));
    } catch (const std::exception& e) {
      r.status = ExecStatus::kExecError;
      r.stderr_text = std::string("bad request: ") + e.what();
    }
    std::cout << encode_response(r) << '\n' << std::flush;
  }
  return 0;
}
