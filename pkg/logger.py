from rich.console import Console
from rich.logging import RichHandler
from dotenv import load_dotenv
import logging
from datetime import datetime
import os
from typing import Optional, Sequence

load_dotenv()

# Консоль для rich-вывода (stderr, чтобы не мешать выводу отчетов)
console = Console(stderr=True)

console_handler = RichHandler(
    console=console,
    rich_tracebacks=True,
    show_path=False
)
console_handler.setFormatter(logging.Formatter("%(message)s", "[%X]"))

logger = logging.getLogger("planner_logger")
logger.setLevel(os.getenv("PLANNER_LOG_LEVEL", "INFO").upper())
logger.addHandler(console_handler)
logger.propagate = False

# Файловый лог включается только при заданной директории
log_dir = os.getenv("PLANNER_LOG_DIR")
if log_dir:
    os.makedirs(log_dir, exist_ok=True)
    file_formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        "%Y-%m-%d %H:%M:%S"
    )
    log_file = os.path.join(log_dir, f"planner_{datetime.now().strftime('%Y%m%d')}.log")
    file_handler = logging.FileHandler(log_file, encoding='utf-8')
    file_handler.setFormatter(file_formatter)
    logger.addHandler(file_handler)


def log_error(error: Exception, context: str = None):
    """
    Логирование ошибок
    """
    message = f"Error: {str(error)}"
    if context:
        message = f"{context} - {message}"
    logger.error(message, exc_info=logger.isEnabledFor(logging.DEBUG))


def log_query(start, goal, status: str, cost: float, samples: int):
    """
    Логирование результата запроса точка-точка
    """
    logger.debug(
        f"Query {start} -> {goal}: {status}, cost={cost:.4f}, new samples={samples}"
    )


def log_iteration(method: str, iteration: int, chosen: Sequence[int],
                  lower_bound: float, certified: Optional[float] = None):
    """
    Логирование итерации выбора PoI
    """
    message = f"{method.upper()} iteration {iteration}: chosen={list(chosen)} lower_bound={lower_bound:.4f}"
    if certified is not None:
        message += f" certified={certified:.4f}"
    logger.debug(message)


def log_phase(name: str, seconds: float):
    """
    Логирование длительности этапа конвейера
    """
    logger.info(f"Этап '{name}' завершен за {seconds:.3f} с")
