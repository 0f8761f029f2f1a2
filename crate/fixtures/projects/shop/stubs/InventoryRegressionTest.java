package shop;

import static org.junit.Assert.assertEquals;

import org.junit.Test;
import shop.Inventory;

public class InventoryRegressionTest {
    @Test
    public void countAfterTake() {
        Inventory inv = new Inventory();
        inv.add("cup", 4);
        inv.take("cup", 3);
        assertEquals(1, inv.count("cup"));
    }
}
