
# === 枚举预算 ===
ENUMERATION_BUDGET = 10**7          # 纯策略组合穷举上限
SUBSET_ENUMERATION_MAX_PLAYERS = 16  # 子集混合分布显式枚举的最大人数（2^(n-1) 个子集）
STRUCTURE_STATE_BUDGET = 2048        # 反事实结构的状态数上限（信念矩阵为稠密数组）

# === 数值精度 ===
TOLERANCE = 1e-9                 # 浮点判定容差，落在容差内的比较改用有理数精确重算
NORMALIZATION_TOLERANCE = 1e-12  # 概率归一化容差

# 公共品博弈默认贡献网格（100 = 整分）
PGG_DEFAULT_GRID = 100

# === QRE 不动点迭代 ===
QRE_DAMPING = 0.5
QRE_MAX_ITERATIONS = 200000
QRE_RESIDUAL = 1e-10
QRE_MAX_STRATEGIES = 200

# === 扫描输出 ===
CSV_SIGNIFICANT_DIGITS = 12
SPOT_CHECK_FRACTION = 0.01  # 测试模式下抽查比例
SPOT_CHECK_SEED = 20140615

# 是否显示 tqdm 进度条
SHOW_PROGRESS = True
