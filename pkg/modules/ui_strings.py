# modules/ui_strings.py
# Command-line messages in several languages (English/Polish).
# Сообщения командной строки на нескольких языках (Английский/Польский).

# Structure: { "LANGUAGE_CODE": { "key": "Translated Text", ... } }
# Структура: { "КОД_ЯЗЫКА": { "ключ": "Переведенный текст", ... } }
TRANSLATIONS = {
    "EN": {
        "description": "Provisioning planner for quantum cloud computing (two-stage stochastic MILP).",
        "cmd_plan": "Solve one instance and write the plan summary as CSV.",
        "cmd_sweep": "Sweep one or two parameters over a preset and write one row per point and mode.",
        "cmd_compare": "Compare the stochastic, expected-value and deterministic models.",
        "cmd_purify": "Print the minimum pair count for a purification target.",
        "plan_done": "Plan written to {path}: status {status}, total cost {total}",
        "sweep_done": "Sweep written to {path}: {rows} rows",
        "compare_done": "Comparison written to {path}; ordering det <= sp <= ev {holds}",
        "holds": "holds",
        "violated": "VIOLATED",
        "purify_result": "Minimum pairs: {pairs}",
        "purify_rounds": "Purification rounds: {rounds}",
        "purify_unreachable": "Target fidelity {target} cannot be reached from {base} within {max_pairs} pairs",
        "infeasible": "Infeasible: {error}",
        "error": "Error: {error}",
        "usage_error": "Usage error: {error}",
        "lp_written": "LP model written to {path}",
        "xlsx_written": "Plan workbook written to {path}",
        "bounds_written": "Benders trajectory written to {path}",
        "not_converged": "Benders stopped before convergence",
    },
    "PL": {
        "description": "Planer zasobów dla kwantowych chmur obliczeniowych (dwuetapowy stochastyczny MILP).",
        "cmd_plan": "Rozwiąż jedną instancję i zapisz podsumowanie planu do CSV.",
        "cmd_sweep": "Przegląd jednego lub dwóch parametrów presetu; jeden wiersz na punkt i tryb.",
        "cmd_compare": "Porównaj model stochastyczny, wartości oczekiwanej i deterministyczny.",
        "cmd_purify": "Wypisz minimalną liczbę par dla docelowej wierności.",
        "plan_done": "Plan zapisany do {path}: status {status}, koszt całkowity {total}",
        "sweep_done": "Przegląd zapisany do {path}: {rows} wierszy",
        "compare_done": "Porównanie zapisane do {path}; porządek det <= sp <= ev {holds}",
        "holds": "zachowany",
        "violated": "NARUSZONY",
        "purify_result": "Minimalna liczba par: {pairs}",
        "purify_rounds": "Liczba rund oczyszczania: {rounds}",
        "purify_unreachable": "Wierność {target} jest nieosiągalna z {base} przy {max_pairs} parach",
        "infeasible": "Brak rozwiązania dopuszczalnego: {error}",
        "error": "Błąd: {error}",
        "usage_error": "Błąd użycia: {error}",
        "lp_written": "Model LP zapisany do {path}",
        "xlsx_written": "Skoroszyt planu zapisany do {path}",
        "bounds_written": "Trajektoria Bendersa zapisana do {path}",
        "not_converged": "Algorytm Bendersa zatrzymany przed zbieżnością",
    },
}


def get_translations(lang_code="EN"):
    # Retrieves the translation dictionary for the language code, falling back to English.
    # Получает словарь переводов для кода языка, по умолчанию английский.
    return TRANSLATIONS.get(str(lang_code).upper(), TRANSLATIONS["EN"])
