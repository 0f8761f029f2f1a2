package shop;

import java.util.HashMap;
import java.util.Map;

public class Inventory {
    public Map<String, Integer> stock = new HashMap<>();

    public void add(String item, int count) {
        stock.put(item, stock.getOrDefault(item, 0) + count);
    }

    public boolean take(String item, int count) {
        int have = stock.getOrDefault(item, 0);
        if (have < count) {
            return false;
        }
        stock.put(item, have - count);
        return true;
    }

    public int count(String item) {
        return stock.getOrDefault(item, 0);
    }
}
