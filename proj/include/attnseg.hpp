// Copyright 2026 The attnseg Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include "attnseg/error.hpp"
#include "attnseg/eval.hpp"
#include "attnseg/lsp.hpp"
#include "attnseg/manifest.hpp"
#include "attnseg/mask_io.hpp"
#include "attnseg/overlay.hpp"
#include "attnseg/pipeline.hpp"
#include "attnseg/sffa.hpp"
#include "attnseg/smr.hpp"
#include "attnseg/tensor_file.hpp"
#include "attnseg/types.hpp"
