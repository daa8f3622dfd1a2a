#pragma once

// Built-in systems for `reproduce`. Kept byte-identical to the files under
// configs/ (checked by the test suite).

#include <array>
#include <optional>
#include <string_view>

namespace ltvcert {

struct BuiltinExample {
  std::string_view id;
  std::string_view file;
  std::string_view json;
};

inline constexpr std::array<BuiltinExample, 3> kBuiltinExamples = {{
    {"paper-sec5", "paper_sec5.json", R"json({
  "schema_version": 1,
  "dimension": 2,
  "period": 6.2831853071795862,
  "segments": [
    {
      "t_start": 0,
      "t_end": 6.2831853071795862,
      "entries": [["1.1*cos(t/2)-1", "1"],
                  ["-1", "1.1*cos(t/2)-1"]]
    }
  ],
  "perturbation": {
    "gamma": "0.1*(abs(cos(t))+abs(sin(t)))",
    "delta": "0",
    "g": ["0.1*(sin(t)*x1+cos(t)*x2)",
          "0.1*(cos(t)*x1+sin(t)*x2)"]
  },
  "analysis": {
    "kappa": 1,
    "constants_mode": "spectral",
    "lambda": 0.238,
    "grid_points": 512
  },
  "simulation": {
    "x0": [1, 1],
    "t0": 0,
    "tf": 62.831853071795862,
    "step": 0.01
  }
}
)json"},
    {"remark-counterexample", "remark_counterexample.json", R"json({
  "schema_version": 1,
  "dimension": 2,
  "segments": [
    {
      "t_start": 0,
      "t_end": 0.0003183098861837907,
      "entries": [["0", "1"],
                  ["0", "0"]]
    },
    {
      "t_start": 0.0003183098861837907,
      "t_end": 1,
      "entries": [["0", "1"],
                  ["t^2*sin(1/t)^2", "0"]]
    }
  ],
  "analysis": {
    "kappa": 1,
    "grid_points": 512
  }
}
)json"},
    {"switched-demo", "switched_demo.json", R"json({
  "schema_version": 1,
  "dimension": 2,
  "switched": {
    "modes": [
      [[-2, 1], [-1, -2]],
      [[0.2, 1], [-1, 0.2]]
    ],
    "switch_times": [9],
    "mode_sequence": [0, 1],
    "horizon": 10,
    "periodic": true,
    "kappa_s": 1,
    "kappa_u": 0.5
  },
  "analysis": {
    "kappa": 1,
    "grid_points": 512
  },
  "simulation": {
    "x0": [1, 0],
    "tf": 100,
    "step": 0.01
  }
}
)json"},
}};

inline std::optional<BuiltinExample> find_builtin(std::string_view id) {
  for (const auto& e : kBuiltinExamples)
    if (e.id == id) return e;
  return std::nullopt;
}

}  // namespace ltvcert
