EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_PLANNING_FAILURE = 3
EXIT_INVARIANT_VIOLATION = 4


class PlannerError(Exception):
    """Базовое исключение планировщика"""
    exit_code = EXIT_INVARIANT_VIOLATION


class InputError(PlannerError):
    """Некорректные входные данные (файлы, параметры, позы)"""
    exit_code = EXIT_INPUT_ERROR


class MapFormatError(InputError):
    """Ошибка разбора файла карты"""
    pass


class MissionFormatError(InputError):
    """Ошибка разбора файла миссии или плана"""
    pass


class EnvSpecError(InputError):
    """Ошибка в описании синтетической среды"""
    pass


class EndpointInvalidError(InputError):
    """Начальная или конечная поза запроса не проходит проверку валидности"""
    def __init__(self, endpoint: str, state, pair=None):
        self.endpoint = endpoint
        self.state = state
        self.pair = pair
        message = f"{endpoint} pose {state} is not valid"
        if pair is not None:
            message += f" (pair {pair[0]}-{pair[1]})"
        super().__init__(message)


class InvalidPoseError(InputError):
    """Поза миссии (старт или PoI) не проходит проверку валидности при загрузке"""
    def __init__(self, toi_id, poi_index, state):
        self.toi_id = toi_id
        self.poi_index = poi_index
        self.state = state
        if toi_id is None:
            message = f"start pose {state} is not valid"
        else:
            message = f"PoI {poi_index} of ToI '{toi_id}' at {state} is not valid"
        super().__init__(message)


class MissingCostError(InputError):
    """В таблице стоимостей нет нужной пары поз"""
    def __init__(self, source: str, target: str):
        self.pair = (source, target)
        super().__init__(f"missing cost for pair {source} -> {target}")


class PlanningError(PlannerError):
    """Планирование не удалось (недостижимость, несвязность)"""
    exit_code = EXIT_PLANNING_FAILURE


class UnreachableError(PlanningError):
    """Для пары поз не найден бесколлизионный путь"""
    def __init__(self, message: str, stage=None):
        self.stage = stage
        super().__init__(message)


class DisconnectedToIError(PlanningError):
    """В матрице стоимостей есть ToI, недостижимый из остальных"""
    def __init__(self, index: int, message: str = None):
        self.index = index
        super().__init__(message or f"disconnected ToI at matrix index {index}")


class SolverLimitError(InputError):
    """Точный решатель TSP не поддерживает задачу такого размера"""
    pass


class InvariantViolation(PlannerError):
    """Нарушен внутренний инвариант результата"""
    exit_code = EXIT_INVARIANT_VIOLATION


class InformedRegionEmpty(PlannerError):
    """Информированная область пуста: улучшение стоимости невозможно"""
    pass
