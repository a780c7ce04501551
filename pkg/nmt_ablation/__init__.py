# SPDX-FileCopyrightText: 2026-present nmt-ablation contributors
#
# SPDX-License-Identifier: MIT

import os
import pathlib

PKG_PATH = pathlib.Path(os.path.dirname(__file__)).as_posix()
