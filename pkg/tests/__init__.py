# SPDX-FileCopyrightText: 2026-present nmt-ablation contributors
#
# SPDX-License-Identifier: MIT
