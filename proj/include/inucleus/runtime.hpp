/*
 * Copyright (c) 2026 The inucleus Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef INUCLEUS_RUNTIME_HPP
#define INUCLEUS_RUNTIME_HPP

namespace inucleus {

/// Keeps large activation buffers on the heap between steps instead of
/// returning them to the OS (glibc only; a no-op elsewhere). Call once at
/// startup, before the first allocation of a large tensor.
void configure_allocator();

}  // namespace inucleus

#endif  // INUCLEUS_RUNTIME_HPP
