# Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Raw-waveform inception-nucleus sound classifier."""

from ._core import (
    TARGET_LENGTH,
    TARGET_RATE,
    CheckpointError,
    ConfigError,
    InucleusError,
    IoError,
    Model,
    NumericalError,
    ParseError,
    ShapeError,
    arch_names,
    count_params,
    load_clip,
    prepare,
    read_wav,
    resample,
    run_cli,
    synth_class_names,
    synth_dataset,
    test_arch_names,
    write_wav,
)

__all__ = [
    "TARGET_LENGTH",
    "TARGET_RATE",
    "CheckpointError",
    "ConfigError",
    "InucleusError",
    "IoError",
    "Model",
    "NumericalError",
    "ParseError",
    "ShapeError",
    "arch_names",
    "count_params",
    "load_clip",
    "prepare",
    "read_wav",
    "resample",
    "run_cli",
    "synth_class_names",
    "synth_dataset",
    "test_arch_names",
    "write_wav",
]
